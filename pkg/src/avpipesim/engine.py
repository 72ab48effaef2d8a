"""Simulation engine.

Runs a scenario through a pipeline graph on the event kernel: sensor
emission, node triggering per execution pattern, queuing on processor
groups, mitigation hooks, control application to the ego, and the
reaction-time decomposition T1 - T0 = t_sensor + t_module + t_bubble.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, asdict
from typing import Optional

from . import mitigation as mit
from .mitigation import MitigationConfig, PathChoice, StealRequest
from .pipeline import (Channel, ChannelPolicy, ExecutionPattern, FrameMessage,
                       LatencyModel, NodeRole, NodeSpec, ObjectTrack,
                       PipelineGraph, downstream_estimate, fusion_update,
                       predict_latency, sample_latency, validate_graph)
from .safety import RssParams, SafetyLevel, check_safety, object_deadline
from .scenario import (AgentState, Scenario, TrajectorySpec, agent_state_at,
                       visible_agents)
from .simkernel import EventQueue, StreamFactory


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProcessorGroup:
    name: str
    worker_count: int
    pinned_nodes: tuple[str, ...]
    budget_us: int = 1_000_000_000

    def __post_init__(self):
        if self.worker_count < 1:
            raise EngineError(f"group {self.name}: worker_count must be >= 1")


@dataclass(frozen=True)
class EngineConfig:
    tick_us: int = 100_000
    sensor_range_m: float = 60.0
    actuation_delay_us: int = 20_000
    response_margin_us: int = 600_000
    brake_level_mps2: float = -6.0
    mitigation: MitigationConfig = MitigationConfig()
    rss: RssParams = RssParams()

    def __post_init__(self):
        if self.tick_us <= 0:
            raise EngineError("config.tick must be > 0")


@dataclass
class Span:
    node: str
    frame_seq: int
    start_us: int
    end_us: int
    worker: str
    ready_us: int
    path: str = "normal"
    guest: bool = False
    residual: bool = False


@dataclass
class FrameRecord:
    seq: int                # newest sensor frame feeding this output
    sensor_ts: int
    done_ts: int
    e2e_us: int
    module_us: int
    bubble_us: int
    terminal: str
    path: str
    has_critical: bool
    partial: bool


@dataclass
class ReactionRecord:
    hazard_ts: int          # T0
    agent_id: str
    label: str
    reacted: bool
    decision_ts: int = 0    # T1
    t_sensor_us: int = 0
    t_module_us: int = 0
    t_bubble_us: int = 0
    path: str = "normal"

    @property
    def reaction_us(self) -> int:
        return self.decision_ts - self.hazard_ts


@dataclass
class SafetySample:
    t_us: int
    agent_id: str
    level: str
    lon_gap_m: float
    lat_gap_m: float


@dataclass
class RunTrace:
    scenario_digest: str
    seed: int
    duration_us: int
    spans: list[Span] = field(default_factory=list)
    frames: list[FrameRecord] = field(default_factory=list)
    reactions: list[ReactionRecord] = field(default_factory=list)
    safety_samples: list[SafetySample] = field(default_factory=list)
    ego_segments: list[tuple[int, float]] = field(default_factory=list)
    captures: list[tuple[int, int, tuple[str, ...]]] = field(default_factory=list)
    busy_us_by_group: dict[str, int] = field(default_factory=dict)
    worker_count_by_group: dict[str, int] = field(default_factory=dict)
    budget_violations: int = 0
    steals_admitted: int = 0
    steals_rejected: int = 0

    def e2e_samples(self) -> list[int]:
        return [f.e2e_us for f in self.frames]

    def busy_fraction(self) -> float:
        total_workers = sum(self.worker_count_by_group.values())
        if total_workers == 0 or self.duration_us == 0:
            return 0.0
        busy = sum(self.busy_us_by_group.values())
        return busy / (total_workers * self.duration_us)

    def to_ndjson(self) -> str:
        lines = []
        for s in self.spans:
            lines.append(json.dumps({"type": "span", **asdict(s)}, sort_keys=True))
        for f in self.frames:
            lines.append(json.dumps({"type": "frame", **asdict(f)}, sort_keys=True))
        for r in self.reactions:
            lines.append(json.dumps({"type": "reaction", **asdict(r)}, sort_keys=True))
        for ss in self.safety_samples:
            lines.append(json.dumps({"type": "safety", **asdict(ss)}, sort_keys=True))
        lines.append(json.dumps({
            "type": "summary", "scenario_digest": self.scenario_digest,
            "seed": self.seed, "duration_us": self.duration_us,
            "busy_us_by_group": self.busy_us_by_group,
            "worker_count_by_group": self.worker_count_by_group,
            "budget_violations": self.budget_violations,
            "steals_admitted": self.steals_admitted,
            "steals_rejected": self.steals_rejected,
            "ego_segments": self.ego_segments}, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_ndjson(cls, text: str) -> "RunTrace":
        trace = None
        spans, frames, reactions, samples = [], [], [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            kind = obj.pop("type")
            if kind == "span":
                spans.append(Span(**obj))
            elif kind == "frame":
                frames.append(FrameRecord(**obj))
            elif kind == "reaction":
                reactions.append(ReactionRecord(**obj))
            elif kind == "safety":
                samples.append(SafetySample(**obj))
            elif kind == "summary":
                trace = cls(
                    scenario_digest=obj["scenario_digest"], seed=obj["seed"],
                    duration_us=obj["duration_us"],
                    busy_us_by_group=obj["busy_us_by_group"],
                    worker_count_by_group=obj["worker_count_by_group"],
                    budget_violations=obj["budget_violations"],
                    steals_admitted=obj["steals_admitted"],
                    steals_rejected=obj["steals_rejected"],
                    ego_segments=[tuple(s) for s in obj["ego_segments"]])
            else:
                raise EngineError(f"unknown trace record type {kind!r}")
        if trace is None:
            raise EngineError("trace file has no summary record")
        trace.spans, trace.frames = spans, frames
        trace.reactions, trace.safety_samples = reactions, samples
        return trace


class _Task:
    __slots__ = ("node", "ready_us", "inputs", "residual_objects", "seq")
    _next = 0

    def __init__(self, node: str, ready_us: int, inputs=None, residual_objects=None):
        self.node = node
        self.ready_us = ready_us
        self.inputs = inputs            # pre-bound messages, or None to pull
        self.residual_objects = residual_objects
        self.seq = _Task._next
        _Task._next += 1


class _GroupState:
    def __init__(self, spec: ProcessorGroup):
        self.spec = spec
        self.busy_until = [0] * spec.worker_count   # 0 means free (clock >= value)
        self.running: list[Optional[_Task]] = [None] * spec.worker_count
        self.ready: deque[_Task] = deque()
        self.busy_us = 0

    def free_worker(self, now: int) -> Optional[int]:
        for i, until in enumerate(self.busy_until):
            if self.running[i] is None and until <= now:
                return i
        return None

    def worker_loads(self, now: int) -> list[int]:
        return [max(0, u - now) for u in self.busy_until]


class Simulation:
    """One deterministic run; single-threaded."""

    def __init__(self, scenario: Scenario, graph: PipelineGraph,
                 groups: list[ProcessorGroup], config: EngineConfig, seed: int):
        validate_graph(graph)
        self.scenario = scenario
        self.graph = graph
        self.config = config
        self.seed = seed
        self.queue = EventQueue()
        self.streams = StreamFactory(seed)

        pinned: dict[str, str] = {}
        for g in groups:
            for n in g.pinned_nodes:
                if n in pinned:
                    raise EngineError(f"node {n} pinned to both {pinned[n]} and {g.name}")
                if n not in graph.nodes:
                    raise EngineError(f"group {g.name} pins unknown node {n!r}")
                pinned[n] = g.name
        for n in graph.nodes:
            if n not in pinned:
                raise EngineError(f"node {n} is not pinned to any group")
        self.node_group = pinned
        self.groups = {g.name: _GroupState(g) for g in groups}

        self.ego_segments: list[tuple[int, float]] = []
        self._frame_seq = 0
        self._fusion_history: dict[str, dict[str, list[bool]]] = {}
        self._fusion_tracks: dict[str, dict[str, ObjectTrack]] = {}
        self._proactive_arrival: dict[str, Optional[int]] = {}
        self._capture_index: dict[int, tuple[int, tuple[str, ...]]] = {}
        self._terminal_outputs: list[tuple[int, dict, tuple[str, ...], str]] = []

        from .scenario import scenario_to_json
        digest_src = json.dumps(scenario_to_json(scenario), sort_keys=True)
        import hashlib
        self.trace = RunTrace(
            scenario_digest=hashlib.sha256(digest_src.encode()).hexdigest()[:16],
            seed=seed, duration_us=scenario.duration_us,
            worker_count_by_group={g.name: g.worker_count for g in groups})

        terminals = [n for n, s in graph.nodes.items() if s.role == NodeRole.CONTROL]
        if not terminals:
            terminals = [n for n in graph.nodes if not graph.successors(n)]
        self._terminal_nodes = set(terminals)

    # -- ego kinematics ----------------------------------------------------

    def ego_state(self, t_us: int) -> AgentState:
        traj = TrajectorySpec(initial=self.scenario.ego_initial,
                              segments=tuple(self.ego_segments))
        return agent_state_at(traj, t_us)

    def apply_control(self, decision: str, level: float, decided_us: int):
        """Append an acceleration segment at decision time + actuation delay."""
        if decision == "hold":
            return
        t_eff = decided_us + self.config.actuation_delay_us
        if self.ego_segments and t_eff <= self.ego_segments[-1][0]:
            t_eff = self.ego_segments[-1][0] + 1
        if decision == "brake":
            self.ego_segments.append((t_eff, level))
        self.trace.ego_segments = list(self.ego_segments)

    # -- run loop ----------------------------------------------------------

    def run(self) -> RunTrace:
        for name in sorted(self.graph.nodes):
            spec = self.graph.nodes[name]
            if spec.pattern == ExecutionPattern.TIMING:
                self._schedule_tick(name, 0)
        self._schedule_safety_tick(0)
        self.queue.run_until(self.scenario.duration_us)
        for g in self.groups.values():
            self.trace.busy_us_by_group[g.spec.name] = g.busy_us
        for t0, agent_id, label in self.scenario.hazard_events:
            self.trace.reactions.append(self._measure_reaction(t0, agent_id, label))
        return self.trace

    def _schedule_tick(self, node: str, t: int):
        if t > self.scenario.duration_us:
            return
        self.queue.schedule(t, lambda: self._on_tick(node, t))

    def _on_tick(self, node: str, t: int):
        spec = self.graph.nodes[node]
        if spec.role == NodeRole.SENSOR:
            self._capture(node, t)
        else:
            task = _Task(node, ready_us=t)
            grp = self.groups[self.node_group[node]]
            grp.ready.append(task)
            self._dispatch(grp)
        self._schedule_tick(node, t + spec.period_us)

    def _schedule_safety_tick(self, t: int):
        if t > self.scenario.duration_us:
            return
        self.queue.schedule(t, lambda: self._on_safety_tick(t))

    def _on_safety_tick(self, t: int):
        ego = self.ego_state(t)
        for aid, kind, traj in self.scenario.agents:
            st = agent_state_at(traj, t)
            status = check_safety(ego, st, self.config.rss, self.scenario.d_buffer_m)
            self.trace.safety_samples.append(SafetySample(
                t_us=t, agent_id=aid, level=status.level.value,
                lon_gap_m=round(status.longitudinal_gap_m, 6),
                lat_gap_m=round(status.lateral_gap_m, 6)))
        self._schedule_safety_tick(t + self.config.tick_us)

    # -- sensing -----------------------------------------------------------

    def _capture(self, node: str, t: int):
        spec = self.graph.nodes[node]
        ego = self.ego_state(t)
        seen = visible_agents(self.scenario, t, self.config.sensor_range_m, ego_state=ego)
        cap = self.config.mitigation.deadline_cap_us
        objects = []
        for aid, kind, st in seen:
            dl, capped = object_deadline(t, ego, st, self.scenario.d_buffer_m,
                                         self.config.rss, deadline_cap_us=cap)
            objects.append(ObjectTrack(agent_id=aid, kind=kind, state=st,
                                       deadline_us=dl, deadline_capped=capped))
        objects = tuple(objects)
        seq = self._frame_seq
        self._frame_seq += 1
        ids = tuple(o.agent_id for o in objects)
        self._capture_index[seq] = (t, ids)
        self.trace.captures.append((seq, t, ids))
        msg = FrameMessage(
            seq=seq, sensor_ts=t, created_ts=t, objects=objects,
            message_deadline=mit.message_deadline(objects, t, cap),
            provenance=node, lineage={seq: (t, 0, t)})
        if _model_is_zero(spec.latency):
            self._emit(node, msg)
        else:
            task = _Task(node, ready_us=t, inputs=[msg])
            grp = self.groups[self.node_group[node]]
            grp.ready.append(task)
            self._dispatch(grp)

    # -- scheduling --------------------------------------------------------

    def _dispatch(self, grp: _GroupState):
        now = self.queue.clock
        while grp.ready:
            widx = grp.free_worker(now)
            if widx is None:
                return
            task = grp.ready.popleft()
            if not self._start_task(task, grp, widx):
                continue

    def _pull_inputs(self, node: str) -> list[FrameMessage]:
        msgs = []
        for ch_id in self.graph.nodes[node].inputs:
            m = self.graph.channels[ch_id].take()
            if m is not None:
                msgs.append(m)
        return msgs

    def _start_task(self, task: _Task, grp: _GroupState, widx: int) -> bool:
        now = self.queue.clock
        spec = self.graph.nodes[task.node]
        if task.inputs is None:
            task.inputs = self._pull_inputs(task.node)
            if not task.inputs:
                return False    # data was superseded (latest-only) or drained

        objects = _merge_objects(task.inputs)
        cfg = self.config.mitigation
        path = PathChoice.NORMAL
        critical = residual = ()
        is_residual = task.residual_objects is not None
        if is_residual:
            objects = task.residual_objects

        if (not is_residual and cfg.fastpath and spec.supports_fastpath):
            probe = _rebuild_message(task.inputs, objects, now, cfg.deadline_cap_us)
            est = downstream_estimate(self.graph, task.node, probe.counts())
            path = mit.choose_path(spec, probe, now, est)
            if path == PathChoice.FASTPATH:
                ego = self.ego_state(now)
                critical, residual = mit.partial_update(objects, ego,
                                                        cfg.criticality_radius_m)
                objects = critical

        counts: dict = {}
        for o in objects:
            counts[o.kind] = counts.get(o.kind, 0) + 1
        stream = self.streams.stream(f"latency/{task.node}")
        if path == PathChoice.FASTPATH:
            model = spec.fast_latency
            lookahead = cfg.fast_lookahead_m if spec.lookahead_m is not None else None
        else:
            model = spec.latency
            lookahead = spec.lookahead_m
        duration = sample_latency(model, counts, lookahead, len(objects), stream)

        if cfg.proactive and spec.proactive_cost_us > 0 and not is_residual:
            arrival = self._proactive_arrival.get(task.node)
            if arrival is not None:
                credit = mit.proactive_credit(spec.proactive_cost_us, arrival, now,
                                              cancelled=cfg.cancel_proactive_every_frame)
                duration = max(1, duration - credit)
            self._proactive_arrival[task.node] = None

        end = now + duration
        grp.busy_until[widx] = end
        grp.running[widx] = task
        grp.busy_us += duration
        span = Span(node=task.node, frame_seq=_newest_origin(task.inputs),
                    start_us=now, end_us=end, worker=f"{grp.spec.name}/{widx}",
                    ready_us=task.ready_us, path=path.value,
                    guest=(self.node_group[task.node] != grp.spec.name),
                    residual=is_residual)
        self.trace.spans.append(span)
        if not span.guest and end - task.ready_us > grp.spec.budget_us:
            self.trace.budget_violations += 1

        self.queue.schedule(end, lambda: self._finish_task(
            task, grp, widx, span, objects, residual, duration))
        return True

    def _finish_task(self, task: _Task, grp: _GroupState, widx: int, span: Span,
                     objects, residual, duration: int):
        now = self.queue.clock
        grp.running[widx] = None
        spec = self.graph.nodes[task.node]
        out_objects = self._transform_objects(spec, task.inputs, objects)
        msg = FrameMessage(
            seq=_newest_origin(task.inputs), sensor_ts=_newest_capture_ts(task.inputs),
            created_ts=now, objects=out_objects,
            message_deadline=mit.message_deadline(
                out_objects, now, self.config.mitigation.deadline_cap_us),
            provenance=task.node,
            partial=(span.path == PathChoice.FASTPATH.value or span.residual),
            lineage=_advance_lineage(task.inputs, duration, now))

        deliver = True
        if span.residual and not mit.residual_needs_downstream(objects):
            deliver = False
        if spec.role == NodeRole.CONTROL:
            self._decide(msg, now)
        if task.node in self._terminal_nodes:
            self._record_terminal(msg, span)
        if deliver:
            self._emit(task.node, msg)

        if residual:
            rtask = _Task(task.node, ready_us=now, inputs=task.inputs,
                          residual_objects=tuple(residual))
            home = self.groups[self.node_group[task.node]]
            home.ready.append(rtask)

        for g in self.groups.values():
            self._dispatch(g)

    def _transform_objects(self, spec: NodeSpec, inputs, objects):
        if spec.role != NodeRole.FUSION or spec.fusion is None:
            return tuple(objects)
        hist = self._fusion_history.setdefault(spec.name, {})
        tracks = self._fusion_tracks.setdefault(spec.name, {})
        detections = set()
        for o in objects:
            detections.add(o.agent_id)
            tracks[o.agent_id] = o
        published, hist = fusion_update(spec.fusion, hist, detections)
        self._fusion_history[spec.name] = hist
        for oid in list(tracks):
            if oid not in hist:
                del tracks[oid]
        return tuple(sorted((tracks[oid] for oid in published if oid in tracks),
                            key=lambda o: o.agent_id))

    def _emit(self, node: str, msg: FrameMessage):
        for ch_id in self.graph.nodes[node].outputs:
            ch = self.graph.channels[ch_id]
            ch.offer(msg)
            for consumer in sorted(self.graph.consumers_of(ch_id)):
                cspec = self.graph.nodes[consumer]
                if (self.config.mitigation.proactive
                        and cspec.proactive_cost_us > 0
                        and self._proactive_arrival.get(consumer) is None):
                    self._proactive_arrival[consumer] = self.queue.clock
                if cspec.pattern == ExecutionPattern.INTERRUPT:
                    self._trigger_interrupt(consumer)

    def _trigger_interrupt(self, node: str):
        now = self.queue.clock
        grp = self.groups[self.node_group[node]]
        task = _Task(node, ready_us=now)
        if grp.free_worker(now) is not None:
            grp.ready.append(task)
            self._dispatch(grp)
            return
        if self.config.mitigation.stealing and self._try_steal(node, task):
            return
        grp.ready.append(task)

    def _try_steal(self, node: str, task: _Task) -> bool:
        now = self.queue.clock
        inputs_preview = [self.graph.channels[c].peek_latest()
                          for c in self.graph.nodes[node].inputs]
        inputs_preview = [m for m in inputs_preview if m is not None]
        counts: dict = {}
        for o in _merge_objects(inputs_preview):
            counts[o.kind] = counts.get(o.kind, 0) + 1
        spec = self.graph.nodes[node]
        req = StealRequest(node=node, predicted_guest_cost_us=predict_latency(
            spec.latency, counts, spec.lookahead_m))
        home = self.node_group[node]
        for gname in sorted(self.groups):
            if gname == home:
                continue
            host = self.groups[gname]
            widx = host.free_worker(now)
            if widx is None:
                continue
            pending = []
            for t in host.ready:
                pspec = self.graph.nodes[t.node]
                pc: dict = {}
                preview = [self.graph.channels[c].peek_latest()
                           for c in pspec.inputs]
                for o in _merge_objects([m for m in preview if m is not None]):
                    pc[o.kind] = pc.get(o.kind, 0) + 1
                pending.append(predict_latency(pspec.latency, pc, pspec.lookahead_m))
            if mit.steal_admission(req, host.worker_loads(now), pending,
                                   host.spec.budget_us,
                                   self.config.mitigation.steal_safety_factor):
                self.trace.steals_admitted += 1
                self._start_task(task, host, widx)
                return True
            self.trace.steals_rejected += 1
        return False

    # -- decisions and measurement ----------------------------------------

    def _decide(self, msg: FrameMessage, now: int):
        margin = self.config.response_margin_us
        urgent = any(o.deadline_us - now < margin for o in msg.objects)
        if urgent:
            self.apply_control("brake", self.config.brake_level_mps2, now)

    def _record_terminal(self, msg: FrameMessage, span: Span):
        origin = msg.seq
        if origin < 0 or origin not in msg.lineage:
            return
        cap_ts, module, _ = msg.lineage[origin]
        e2e = msg.created_ts - cap_ts
        ego = self.ego_state(msg.created_ts)
        radius = self.config.mitigation.criticality_radius_m
        has_critical = any(abs(o.state.s_m - ego.s_m) <= radius for o in msg.objects)
        self.trace.frames.append(FrameRecord(
            seq=origin, sensor_ts=cap_ts, done_ts=msg.created_ts, e2e_us=e2e,
            module_us=module, bubble_us=e2e - module, terminal=span.node,
            path=span.path, has_critical=has_critical, partial=msg.partial))
        self._terminal_outputs.append(
            (msg.created_ts, dict(msg.lineage),
             tuple(o.agent_id for o in msg.objects), span.path))

    def _measure_reaction(self, t0: int, agent_id: str, label: str) -> ReactionRecord:
        first_capture = None
        for seq in sorted(self._capture_index):
            cap_ts, ids = self._capture_index[seq]
            if cap_ts >= t0 and agent_id in ids:
                first_capture = (seq, cap_ts)
                break
        if first_capture is None:
            return ReactionRecord(hazard_ts=t0, agent_id=agent_id, label=label,
                                  reacted=False)
        _, first_cap_ts = first_capture
        t_sensor = first_cap_ts - t0
        for done_ts, lineage, ids, path in self._terminal_outputs:
            if agent_id not in ids:
                continue
            # attribution origin: the earliest post-hazard capture of the
            # agent that actually fed this output (the first capture may
            # have been superseded on a latest-only channel)
            origin = None
            for seq in sorted(lineage):
                cap_ts, ids_at_capture = self._capture_index.get(seq, (None, ()))
                if (cap_ts is not None and cap_ts >= t0
                        and agent_id in ids_at_capture
                        and lineage[seq][0] == cap_ts):
                    origin = seq
                    break
            if origin is None:
                continue
            t_module = lineage[origin][1]
            t_bubble = (done_ts - t0) - t_sensor - t_module
            return ReactionRecord(hazard_ts=t0, agent_id=agent_id, label=label,
                                  reacted=True, decision_ts=done_ts,
                                  t_sensor_us=t_sensor, t_module_us=t_module,
                                  t_bubble_us=t_bubble, path=path)
        return ReactionRecord(hazard_ts=t0, agent_id=agent_id, label=label,
                              reacted=False)


def _rebuild_message(inputs, objects, now: int, deadline_cap_us: int) -> FrameMessage:
    """Transient view of merged inputs, used to probe the path choice."""
    return FrameMessage(
        seq=_newest_origin(inputs), sensor_ts=_newest_capture_ts(inputs),
        created_ts=now, objects=tuple(objects),
        message_deadline=mit.message_deadline(objects, now, deadline_cap_us),
        provenance="probe")


def _model_is_zero(m: LatencyModel) -> bool:
    return (m.offset_us == 0 and not m.per_kind_cost_us
            and m.noise.kind.value == "none" and m.contention is None
            and m.lookahead_cost_us_per_m == 0.0)


def _merge_objects(msgs) -> tuple[ObjectTrack, ...]:
    """Union of input objects, newest message wins per agent id."""
    best: dict[str, tuple[int, ObjectTrack]] = {}
    for m in msgs:
        for o in m.objects:
            cur = best.get(o.agent_id)
            if cur is None or m.created_ts >= cur[0]:
                best[o.agent_id] = (m.created_ts, o)
    return tuple(o for _, o in sorted(
        ((ts, o) for ts, o in best.values()), key=lambda p: p[1].agent_id))


def _newest_origin(msgs) -> int:
    seqs = [s for m in (msgs or []) for s in m.lineage]
    return max(seqs) if seqs else -1


def _newest_capture_ts(msgs) -> int:
    out = 0
    for m in (msgs or []):
        out = max(out, m.sensor_ts)
    return out


def _advance_lineage(msgs, duration: int, now: int) -> dict:
    """Per origin frame, extend the path through the most recent carrier."""
    lineage: dict[int, tuple[int, int, int]] = {}
    carrier: dict[int, int] = {}
    for m in (msgs or []):
        for origin, (cap_ts, module, _) in m.lineage.items():
            if origin not in lineage or m.created_ts > carrier[origin]:
                lineage[origin] = (cap_ts, module + duration, now)
                carrier[origin] = m.created_ts
    return lineage


def run_simulation(scenario: Scenario, graph: PipelineGraph,
                   groups: list[ProcessorGroup], config: EngineConfig,
                   seed: int) -> RunTrace:
    """Convenience wrapper: one deterministic run on a fresh graph copy."""
    import copy
    return Simulation(scenario, copy.deepcopy(graph), groups, config, seed).run()


def measure_reaction(trace: RunTrace, hazard_ts: int, agent_id: str):
    """Reaction record for one hazard from a finished trace."""
    for r in trace.reactions:
        if r.hazard_ts == hazard_ts and r.agent_id == agent_id:
            return r
    raise KeyError(f"no reaction record for hazard ({hazard_ts}, {agent_id})")
