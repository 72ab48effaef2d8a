"""Tail-latency mitigations.

Object-level deadlines, fastpath selection against the remaining time
budget, partial (critical-first) updates, proactive precomputation
credit, and admission control for best-effort work stealing. These are
pure decision functions; the engine owns the schedule state they act on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .pipeline import (FrameMessage, LatencyModel, NodeSpec, ObjectTrack,
                       predict_latency)
from .safety import DEFAULT_DEADLINE_CAP_US
from .scenario import AgentState


@dataclass(frozen=True)
class MitigationConfig:
    fastpath: bool = False
    proactive: bool = False
    stealing: bool = False
    criticality_radius_m: float = 20.0
    fast_lookahead_m: float = 20.0
    deadline_cap_us: int = DEFAULT_DEADLINE_CAP_US
    steal_safety_factor: float = 1.25
    # test hook: cancel every proactive task before its trigger
    cancel_proactive_every_frame: bool = False

    def __post_init__(self):
        if self.criticality_radius_m <= 0:
            raise ValueError("criticality radius must be > 0")
        if self.steal_safety_factor < 1.0:
            raise ValueError("steal safety factor must be >= 1")


class PathChoice(str, Enum):
    NORMAL = "normal"
    FASTPATH = "fastpath"


def message_deadline(objects, now_us: int,
                     deadline_cap_us: int = DEFAULT_DEADLINE_CAP_US) -> int:
    """Earliest deadline among the frame's objects; cap when empty."""
    if not objects:
        return now_us + deadline_cap_us
    return min(o.deadline_us for o in objects)


def choose_path(node: NodeSpec, msg: FrameMessage, now_us: int,
                downstream_us: int) -> PathChoice:
    """Fastpath iff the normal-path prediction does not fit the budget
    remaining after the estimated downstream cost."""
    if not node.supports_fastpath:
        raise ValueError(f"node {node.name} is not fastpath-enabled")
    remaining = msg.message_deadline - now_us - downstream_us
    if remaining <= 0:
        return PathChoice.FASTPATH
    normal_cost = predict_latency(node.latency, msg.counts(), node.lookahead_m)
    return PathChoice.FASTPATH if normal_cost > remaining else PathChoice.NORMAL


def partial_update(objects: tuple[ObjectTrack, ...], ego: AgentState,
                   radius_m: float) -> tuple[tuple[ObjectTrack, ...],
                                             tuple[ObjectTrack, ...]]:
    """Split objects into (critical, residual) by distance from the ego.

    Critical objects are within radius, sorted by ascending deadline;
    the union of the two halves is exactly the input set.
    """
    critical = [o for o in objects if abs(o.state.s_m - ego.s_m) <= radius_m]
    residual = [o for o in objects if abs(o.state.s_m - ego.s_m) > radius_m]
    critical.sort(key=lambda o: (o.deadline_us, o.agent_id))
    return tuple(critical), tuple(residual)


def fastpath_planning_latency(m: LatencyModel, counts, fast_lookahead_m: float) -> int:
    """Normal-model prediction at the reduced planning horizon."""
    return predict_latency(m, counts, fast_lookahead_m)


def residual_needs_downstream(residual: tuple[ObjectTrack, ...]) -> bool:
    """Residual output re-triggers downstream only if it still carries an
    object whose deadline is real (not the configured cap)."""
    return any(not o.deadline_capped for o in residual)


def proactive_credit(precompute_cost_us: int, arrival_us: int, trigger_us: int,
                     cancelled: bool) -> int:
    """Latency credit earned by precomputation started at arrival.

    The node's effective cost drops by the portion of the precompute
    that completed before the trigger; cancellation forfeits it all.
    """
    if cancelled or trigger_us <= arrival_us:
        return 0
    return min(precompute_cost_us, trigger_us - arrival_us)


@dataclass(frozen=True)
class StealRequest:
    node: str
    predicted_guest_cost_us: int


def steal_admission(req: StealRequest, host_worker_loads_us: list[int],
                    host_pending_costs_us: list[int], budget_us: int,
                    safety_factor: float = 1.25) -> bool:
    """Admit a guest task into a host group only if no host work can miss
    the group budget.

    host_worker_loads_us: remaining busy time per host worker;
    host_pending_costs_us: predicted costs of host tasks not yet started.
    Pending work and the guest are list-scheduled onto the workers; admit
    iff every completion, including the guest on the least-loaded worker,
    stays within the budget.
    """
    loads = sorted(host_worker_loads_us)
    if not loads:
        return False
    for cost in host_pending_costs_us:
        loads[0] += cost
        loads.sort()
    guest = round(req.predicted_guest_cost_us * safety_factor)
    loads[0] += guest
    return max(loads) <= budget_us
