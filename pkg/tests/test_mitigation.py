import pytest

from avpipesim.mitigation import (MitigationConfig, PathChoice, StealRequest,
                                  choose_path, fastpath_planning_latency,
                                  message_deadline, partial_update,
                                  proactive_credit, residual_needs_downstream,
                                  steal_admission)
from avpipesim.pipeline import (ExecutionPattern, FrameMessage, LatencyModel,
                                NodeRole, NodeSpec, ObjectTrack)
from avpipesim.scenario import AgentKind, AgentState
from avpipesim.simkernel import ms

V = AgentKind.VEHICLE


def track(aid, s_m, deadline_us, capped=False):
    return ObjectTrack(agent_id=aid, kind=V,
                       state=AgentState(s_m=s_m, l_m=0, v_mps=5, a_mps2=0),
                       deadline_us=deadline_us, deadline_capped=capped)


def make_msg(objects, sensor_ts=0, deadline=None):
    return FrameMessage(seq=0, sensor_ts=sensor_ts, created_ts=sensor_ts,
                        objects=tuple(objects),
                        message_deadline=(deadline if deadline is not None
                                          else message_deadline(objects, sensor_ts)),
                        provenance="test")


class TestMessageDeadline:
    def test_min_of_deadlines(self):
        objs = [track("a", 5, ms(500)), track("b", 6, ms(300)), track("c", 7, ms(800))]
        assert message_deadline(objs, 0) == ms(300)

    def test_empty_uses_cap(self):
        assert message_deadline([], ms(1000), deadline_cap_us=ms(2000)) == ms(3000)

    def test_single_object_identity(self):
        assert message_deadline([track("a", 5, ms(450))], 0) == ms(450)


class TestChoosePath:
    def make_node(self, normal_offset_us):
        return NodeSpec(name="plan", pattern=ExecutionPattern.INTERRUPT,
                        inputs=("i",), outputs=("o",),
                        latency=LatencyModel(offset_us=normal_offset_us),
                        fast_latency=LatencyModel(offset_us=normal_offset_us // 4),
                        role=NodeRole.PLANNING)

    def test_fastpath_when_normal_does_not_fit(self):
        # deadline 125 ms after capture, now 40 ms in, downstream 40 ms:
        # remaining 45 ms < normal 60 ms
        node = self.make_node(ms(60))
        msg = make_msg([track("a", 5, ms(125))], sensor_ts=0, deadline=ms(125))
        assert choose_path(node, msg, ms(40), ms(40)) == PathChoice.FASTPATH

    def test_normal_when_it_fits(self):
        node = self.make_node(ms(30))
        msg = make_msg([track("a", 5, ms(125))], sensor_ts=0, deadline=ms(125))
        assert choose_path(node, msg, ms(40), ms(40)) == PathChoice.NORMAL

    def test_saturating_when_budget_exhausted(self):
        node = self.make_node(ms(1))
        msg = make_msg([track("a", 5, ms(125))], sensor_ts=0, deadline=ms(125))
        assert choose_path(node, msg, ms(200), 0) == PathChoice.FASTPATH

    def test_rejects_non_fastpath_node(self):
        node = NodeSpec(name="perc", pattern=ExecutionPattern.INTERRUPT,
                        inputs=("i",), outputs=("o",),
                        latency=LatencyModel(offset_us=100), role=NodeRole.PERCEPTION)
        with pytest.raises(ValueError):
            choose_path(node, make_msg([]), 0, 0)


class TestPartialUpdate:
    EGO = AgentState(s_m=0, l_m=0, v_mps=10, a_mps2=0)

    def test_split_by_radius(self):
        objs = (track("near", 5, ms(100)), track("far", 30, ms(200)))
        crit, resid = partial_update(objs, self.EGO, 20.0)
        assert [o.agent_id for o in crit] == ["near"]
        assert [o.agent_id for o in resid] == ["far"]

    def test_all_within_radius(self):
        objs = (track("a", 5, ms(100)), track("b", 10, ms(200)))
        crit, resid = partial_update(objs, self.EGO, 20.0)
        assert len(crit) == 2 and resid == ()

    def test_critical_sorted_by_deadline(self):
        objs = (track("late", 5, ms(900)), track("soon", 8, ms(100)),
                track("mid", 3, ms(400)))
        crit, _ = partial_update(objs, self.EGO, 20.0)
        assert [o.agent_id for o in crit] == ["soon", "mid", "late"]

    def test_conservation_and_disjointness(self):
        objs = tuple(track(f"o{i}", i * 7.0, ms(100 * (i + 1))) for i in range(10))
        crit, resid = partial_update(objs, self.EGO, 20.0)
        assert set(crit) | set(resid) == set(objs)
        assert set(crit) & set(resid) == set()

    def test_residual_propagation_rule(self):
        assert residual_needs_downstream((track("a", 30, ms(500), capped=False),))
        assert not residual_needs_downstream((track("a", 30, ms(500), capped=True),))


class TestFastpathPlanningLatency:
    def test_lookahead_saving(self):
        m = LatencyModel(offset_us=ms(10), lookahead_cost_us_per_m=100.0)
        full = fastpath_planning_latency(m, {}, 100.0)
        short = fastpath_planning_latency(m, {}, 40.0)
        assert full - short == 6000    # 60 m at 0.1 ms/m

    def test_zero_cost_no_saving(self):
        m = LatencyModel(offset_us=ms(10), lookahead_cost_us_per_m=0.0)
        assert (fastpath_planning_latency(m, {}, 100.0)
                == fastpath_planning_latency(m, {}, 40.0))

    def test_monotone_over_lookahead_grid(self):
        m = LatencyModel(offset_us=ms(10), lookahead_cost_us_per_m=50.0)
        vals = [fastpath_planning_latency(m, {}, d) for d in (20, 40, 60, 80, 100)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestProactiveCredit:
    def test_full_credit_when_gap_exceeds_cost(self):
        assert proactive_credit(ms(8), arrival_us=0, trigger_us=ms(20),
                                cancelled=False) == ms(8)

    def test_partial_credit(self):
        assert proactive_credit(ms(8), arrival_us=0, trigger_us=ms(3),
                                cancelled=False) == ms(3)

    def test_cancelled_forfeits(self):
        assert proactive_credit(ms(8), arrival_us=0, trigger_us=ms(20),
                                cancelled=True) == 0


class TestStealAdmission:
    def req(self, cost):
        return StealRequest(node="g", predicted_guest_cost_us=cost)

    def test_admit_within_budget(self):
        assert steal_admission(self.req(ms(3)), [ms(6)], [], ms(10),
                               safety_factor=1.0)

    def test_reject_over_budget(self):
        assert not steal_admission(self.req(ms(5)), [ms(6)], [], ms(10),
                                   safety_factor=1.0)

    def test_empty_host_admits_small_guest(self):
        assert steal_admission(self.req(ms(4)), [0, 0], [], ms(10),
                               safety_factor=1.0)

    def test_pending_host_work_counted(self):
        assert not steal_admission(self.req(ms(3)), [0], [ms(8)], ms(10),
                                   safety_factor=1.0)

    def test_safety_factor_inflates_guest(self):
        assert steal_admission(self.req(ms(8)), [0], [], ms(10), safety_factor=1.0)
        assert not steal_admission(self.req(ms(8)), [0], [], ms(10),
                                   safety_factor=1.3)

    def test_overloaded_host_rejects_everything(self):
        assert not steal_admission(self.req(1), [ms(20)], [], ms(10),
                                   safety_factor=1.0)


class TestConfig:
    def test_bad_radius_rejected(self):
        with pytest.raises(ValueError):
            MitigationConfig(criticality_radius_m=0.0)

    def test_bad_safety_factor_rejected(self):
        with pytest.raises(ValueError):
            MitigationConfig(steal_safety_factor=0.5)
