import pytest

from avpipesim.engine import EngineConfig, ProcessorGroup
from avpipesim.mitigation import MitigationConfig
from avpipesim.pipeline import (Channel, ChannelPolicy, ExecutionPattern,
                                FusionSpec, LatencyModel, NodeRole, NodeSpec,
                                NoiseKind, NoiseSpec, PipelineGraph)
from avpipesim.scenario import (AgentKind, AgentState, Scenario, TrajectorySpec)

ZERO_SENSOR = LatencyModel(offset_us=0)


def make_node(name, pattern, inputs, outputs, latency, role=NodeRole.OTHER, **kw):
    return NodeSpec(name=name, pattern=pattern, inputs=tuple(inputs),
                    outputs=tuple(outputs), latency=latency, role=role, **kw)


def chain_pipeline(stage_offsets_us, sensor_period_us=100_000,
                   channel_policy=ChannelPolicy.FIFO, per_vehicle_us=0,
                   fast=None, lookahead_m=None, fast_lookahead_cost=0.0):
    """sensor -> p1 -> p2 -> ... -> control linear chain.

    stage_offsets_us maps stage name -> (offset, role); stages run in
    insertion order. fast maps stage name -> fast LatencyModel.
    """
    nodes = {}
    channels = {}
    prev_ch = "ch_sensor"
    channels[prev_ch] = Channel(prev_ch, channel_policy, 16)
    nodes["sensor"] = make_node("sensor", ExecutionPattern.TIMING, (), (prev_ch,),
                                ZERO_SENSOR, role=NodeRole.SENSOR,
                                period_us=sensor_period_us)
    for name, (offset, role) in stage_offsets_us.items():
        out = f"ch_{name}"
        channels[out] = Channel(out, channel_policy, 16)
        kinds = ({AgentKind.VEHICLE: per_vehicle_us, AgentKind.PEDESTRIAN: per_vehicle_us,
                  AgentKind.CYCLIST: per_vehicle_us} if per_vehicle_us else {})
        model = LatencyModel(offset_us=offset, per_kind_cost_us=kinds,
                             lookahead_cost_us_per_m=(fast_lookahead_cost
                                                      if role == NodeRole.PLANNING
                                                      else 0.0))
        nodes[name] = make_node(
            name, ExecutionPattern.INTERRUPT, (prev_ch,), (out,), model, role=role,
            fast_latency=(fast or {}).get(name),
            lookahead_m=(lookahead_m if role == NodeRole.PLANNING else None))
        prev_ch = out
    return PipelineGraph(nodes=nodes, channels=channels)


def one_group(graph, workers=4, budget_us=1_000_000_000, name="main"):
    return [ProcessorGroup(name, workers, tuple(graph.nodes), budget_us=budget_us)]


@pytest.fixture
def following_scenario():
    """Ego at 10 m/s behind a lead that brakes hard at t=2 s."""
    lead = TrajectorySpec(
        initial=AgentState(s_m=30.0, l_m=0.0, v_mps=10.0, a_mps2=0.0),
        segments=((2_000_000, -6.0),))
    return Scenario(
        ego_initial=AgentState(s_m=0.0, l_m=0.0, v_mps=10.0, a_mps2=0.0),
        agents=(("lead", AgentKind.VEHICLE, lead),),
        duration_us=8_000_000,
        hazard_events=((2_000_000, "lead", "lead-brakes"),),
        d_buffer_m=3.0)


@pytest.fixture
def quiet_config():
    return EngineConfig()
