"""CLI contract: subcommands, exit codes, file outputs, overrides."""

import json
import os

import pytest

from avpipesim.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from avpipesim.pipeline import (Channel, ChannelPolicy, ExecutionPattern,
                                LatencyModel, NodeRole, NodeSpec, NoiseKind,
                                NoiseSpec, PipelineGraph, save_pipeline)
from avpipesim.scenario import (AgentKind, AgentState, Scenario,
                                TrajectorySpec, save_scenario)
from avpipesim.simkernel import ms, sec

from conftest import chain_pipeline


@pytest.fixture
def workdir(tmp_path):
    sc = Scenario(
        ego_initial=AgentState(s_m=0, l_m=0, v_mps=10.0, a_mps2=0),
        agents=(("lead", AgentKind.VEHICLE, TrajectorySpec(
            initial=AgentState(s_m=30.0, l_m=0, v_mps=10.0, a_mps2=0),
            segments=((sec(2), -6.0),))),),
        duration_us=sec(5),
        hazard_events=((sec(2), "lead", "brake"),),
    )
    graph = chain_pipeline({"detect": (ms(20), NodeRole.PERCEPTION),
                            "act": (ms(5), NodeRole.CONTROL)})
    sc_path = tmp_path / "scenario.json"
    pl_path = tmp_path / "pipeline.json"
    save_scenario(sc, sc_path)
    save_pipeline(graph, pl_path)
    cfg = {
        "format": 1,
        "scenario": "scenario.json",
        "pipeline": "pipeline.json",
        "groups": [{"name": "main", "workers": 2,
                    "pinned_nodes": ["sensor", "detect", "act"]}],
        "seed": 3,
        "out": str(tmp_path / "out"),
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    return tmp_path


def test_validate_ok(workdir, capsys):
    rc = main(["validate", "--scenario", str(workdir / "scenario.json"),
               "--pipeline", str(workdir / "pipeline.json")])
    assert rc == EXIT_OK
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_missing_file(workdir, capsys):
    rc = main(["validate", "--scenario", str(workdir / "nope.json"),
               "--pipeline", str(workdir / "pipeline.json")])
    assert rc == EXIT_VALIDATION
    assert "missing file" in capsys.readouterr().err


def test_validate_reports_cycle(workdir, capsys):
    nodes = {
        "a": NodeSpec("a", ExecutionPattern.INTERRUPT, ("y",), ("x",),
                      LatencyModel(offset_us=ms(1))),
        "b": NodeSpec("b", ExecutionPattern.INTERRUPT, ("x",), ("y",),
                      LatencyModel(offset_us=ms(1))),
    }
    chans = {c: Channel(c, ChannelPolicy.FIFO) for c in ("x", "y")}
    bad = workdir / "cyclic.json"
    save_pipeline(PipelineGraph(nodes=nodes, channels=chans), bad)
    rc = main(["validate", "--scenario", str(workdir / "scenario.json"),
               "--pipeline", str(bad)])
    assert rc == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "cycle" in err and "->" in err


def test_validate_rejects_unknown_field(workdir, capsys):
    obj = json.loads((workdir / "scenario.json").read_text())
    obj["extra_knob"] = True
    bad = workdir / "bad_scenario.json"
    bad.write_text(json.dumps(obj))
    rc = main(["validate", "--scenario", str(bad),
               "--pipeline", str(workdir / "pipeline.json")])
    assert rc == EXIT_VALIDATION
    assert "extra_knob" in capsys.readouterr().err


def test_run_writes_outputs_and_summary(workdir, capsys):
    rc = main(["run", "--config", str(workdir / "config.json")])
    assert rc == EXIT_OK
    out = workdir / "out"
    assert (out / "trace.ndjson").exists()
    assert (out / "report.json").exists()
    assert (out / "cdf.csv").exists()
    line = capsys.readouterr().out.strip()
    for key in ("mean=", "p99=", "worst=", "violations=", "collisions="):
        assert key in line
    report = json.loads((out / "report.json").read_text())
    assert set(report) == {"safety", "latency", "reactions"}


def test_run_byte_identical_across_invocations(workdir):
    out_a = workdir / "a"
    out_b = workdir / "b"
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--out", str(out_a)]) == EXIT_OK
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--out", str(out_b)]) == EXIT_OK
    for name in ("trace.ndjson", "report.json", "cdf.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_run_seed_required_for_stochastic_pipeline(workdir, capsys):
    graph = chain_pipeline({"detect": (ms(20), NodeRole.PERCEPTION),
                            "act": (ms(5), NodeRole.CONTROL)})
    noisy = LatencyModel(offset_us=ms(20),
                        noise=NoiseSpec(kind=NoiseKind.LOGNORMAL, sigma=0.2))
    graph.nodes["detect"] = NodeSpec("detect", ExecutionPattern.INTERRUPT,
                                     graph.nodes["detect"].inputs,
                                     graph.nodes["detect"].outputs,
                                     noisy, role=NodeRole.PERCEPTION)
    save_pipeline(graph, workdir / "pipeline.json")
    cfg = json.loads((workdir / "config.json").read_text())
    del cfg["seed"]
    (workdir / "config.json").write_text(json.dumps(cfg))
    rc = main(["run", "--config", str(workdir / "config.json")])
    assert rc == EXIT_VALIDATION
    assert "seed" in capsys.readouterr().err
    # an explicit flag satisfies the requirement
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--seed", "11"]) == EXIT_OK


def test_run_flag_overrides_config(workdir):
    out_on = workdir / "on"
    out_off = workdir / "off"
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--deadline-cap-us", str(ms(125)),
                 "--out", str(out_on)]) == EXIT_OK
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--out", str(out_off)]) == EXIT_OK
    rep_on = json.loads((out_on / "report.json").read_text())
    rep_off = json.loads((out_off / "report.json").read_text())
    # a 125 ms cap tightens every capped deadline, so reactions differ
    assert rep_on != rep_off or rep_on["reactions"] == rep_off["reactions"]


def test_run_paired_writes_compare(workdir):
    rc = main(["run", "--config", str(workdir / "config.json"),
               "--fastpath", "on", "--paired"])
    assert rc == EXIT_OK
    out = workdir / "out"
    assert (out / "trace_baseline.ndjson").exists()
    assert (out / "report_baseline.json").exists()
    comparison = json.loads((out / "compare.json").read_text())
    assert comparison["frames_compared"] > 0
    assert "violation_delta" in comparison and "per_node_busy_us" in comparison


def test_sweep_axis_validation(workdir, capsys):
    rc = main(["sweep", "--config", str(workdir / "config.json"),
               "--axis", "speed", "--values", "1,2"])
    assert rc == EXIT_VALIDATION
    assert "axis" in capsys.readouterr().err


def test_sweep_needs_two_values(workdir, capsys):
    rc = main(["sweep", "--config", str(workdir / "config.json"),
               "--axis", "seed", "--values", "1"])
    assert rc == EXIT_VALIDATION
    assert ">= 2 values" in capsys.readouterr().err


def test_sweep_writes_table(workdir, capsys):
    rc = main(["sweep", "--config", str(workdir / "config.json"),
               "--axis", "density", "--values", "0,4"])
    assert rc == EXIT_OK
    path = capsys.readouterr().out.strip()
    lines = open(path).read().splitlines()
    assert lines[0] == "value,mean_us,p99_us,max_us,violations,collisions"
    assert len(lines) == 3
    assert lines[1].startswith("0") and lines[2].startswith("4")


def test_sweep_parallel_matches_serial(workdir):
    args = ["sweep", "--config", str(workdir / "config.json"),
            "--axis", "seed", "--values", "1,2,3"]
    assert main(args + ["--out", str(workdir / "ser")]) == EXIT_OK
    os.environ["COLA_SIM_THREADS"] = "3"
    try:
        assert main(args + ["--out", str(workdir / "par")]) == EXIT_OK
    finally:
        del os.environ["COLA_SIM_THREADS"]
    assert ((workdir / "ser" / "sweep.csv").read_bytes()
            == (workdir / "par" / "sweep.csv").read_bytes())


def test_compare_command(workdir, capsys):
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--out", str(workdir / "r1")]) == EXIT_OK
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--fastpath", "on", "--deadline-cap-us", str(ms(125)),
                 "--out", str(workdir / "r2")]) == EXIT_OK
    capsys.readouterr()
    out_path = workdir / "compare.json"
    rc = main(["compare", str(workdir / "r1" / "trace.ndjson"),
               str(workdir / "r2" / "trace.ndjson"),
               "--out", str(out_path)])
    assert rc == EXIT_OK
    report = json.loads(out_path.read_text())
    assert report["frames_compared"] > 0

    rc = main(["compare", str(workdir / "r1" / "trace.ndjson"),
               str(workdir / "missing.ndjson")])
    assert rc == EXIT_VALIDATION


def test_compare_rejects_mismatched_scenarios(workdir, tmp_path, capsys):
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--out", str(workdir / "r1")]) == EXIT_OK
    sc = Scenario(
        ego_initial=AgentState(s_m=0, l_m=0, v_mps=7.0, a_mps2=0),
        agents=(), duration_us=sec(3))
    save_scenario(sc, workdir / "other.json")
    assert main(["run", "--config", str(workdir / "config.json"),
                 "--scenario", str(workdir / "other.json"),
                 "--out", str(workdir / "r3")]) == EXIT_OK
    capsys.readouterr()
    rc = main(["compare", str(workdir / "r1" / "trace.ndjson"),
               str(workdir / "r3" / "trace.ndjson")])
    assert rc == EXIT_RUNTIME
    assert "same scenario" in capsys.readouterr().err
