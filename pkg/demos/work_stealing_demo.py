"""Best-effort work stealing between processor groups.

A one-worker group runs a 150 ms analysis task fed at 10 Hz, so it can
only keep up with every other frame; the dropped frames are lost work.
A second group has a lightly loaded worker with a 200 ms latency budget.
With stealing enabled, overflow frames migrate to the idle host worker
whenever the admission test shows they fit inside the host's budget, so
utilization rises and the host never violates its budget.
"""

from avpipesim import (AgentState, Channel, ChannelPolicy, EngineConfig,
                       ExecutionPattern, LatencyModel, MitigationConfig,
                       NodeRole, NodeSpec, PipelineGraph, ProcessorGroup,
                       Scenario, ms, run_simulation, sec)


def main():
    nodes = {
        "feed": NodeSpec("feed", ExecutionPattern.TIMING, (), ("a",),
                         LatencyModel(offset_us=0), role=NodeRole.SENSOR,
                         period_us=ms(100)),
        "heavy": NodeSpec("heavy", ExecutionPattern.INTERRUPT, ("a",), ("b",),
                          LatencyModel(offset_us=ms(150))),
        "tick": NodeSpec("tick", ExecutionPattern.TIMING, (), ("c",),
                         LatencyModel(offset_us=ms(20)), period_us=ms(100)),
    }
    channels = {c: Channel(c, ChannelPolicy.LATEST_ONLY)
                for c in ("a", "b", "c")}
    graph = PipelineGraph(nodes=nodes, channels=channels)
    groups = [ProcessorGroup("guest", 1, ("feed", "heavy")),
              ProcessorGroup("host", 1, ("tick",), budget_us=ms(200))]
    scenario = Scenario(
        ego_initial=AgentState(s_m=0, l_m=0, v_mps=10.0, a_mps2=0),
        agents=(), duration_us=sec(10))

    print("  %-9s %14s %10s %8s %9s" % ("stealing", "frames done", "busy",
                                        "admitted", "host viol"))
    for stealing in (False, True):
        cfg = EngineConfig(mitigation=MitigationConfig(stealing=stealing))
        trace = run_simulation(scenario, graph, groups, cfg, seed=0)
        done = sum(1 for s in trace.spans if s.node == "heavy")
        print("  %-9s %14d %9.1f%% %8d %9d"
              % ("on" if stealing else "off", done,
                 100.0 * trace.busy_fraction(), trace.steals_admitted,
                 trace.budget_violations))


if __name__ == "__main__":
    main()
