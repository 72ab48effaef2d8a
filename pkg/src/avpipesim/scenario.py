"""Kinematic world model.

Ego and traffic agents move with piecewise constant-acceleration
longitudinal trajectories in a lane frame (longitudinal s, lateral l).
Velocity clamps at zero: a braking agent stops and stays stopped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .simkernel import US_PER_S, RandomStream

SCENARIO_FORMAT = 1


class ScenarioError(ValueError):
    """Scenario file failed validation; message names the offending field."""


class AgentKind(str, Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"
    CYCLIST = "cyclist"


@dataclass(frozen=True)
class AgentState:
    s_m: float          # longitudinal position
    l_m: float          # lateral offset within lane frame
    v_mps: float        # longitudinal velocity, >= 0
    a_mps2: float
    lane_index: int = 0

    def __post_init__(self):
        if self.v_mps < -1e-12:
            raise ScenarioError(f"velocity must be >= 0, got {self.v_mps}")


@dataclass(frozen=True)
class TrajectorySpec:
    """Piecewise constant-acceleration trajectory.

    segments: ordered (start_time_us, acceleration) pairs; the first
    segment takes effect at its start time, with the initial state's
    acceleration before that. visible_from_us models occlusion: the
    agent cannot be detected before this time.
    """

    initial: AgentState
    segments: tuple[tuple[int, float], ...] = ()
    visible_from_us: int = 0

    def __post_init__(self):
        times = [t for t, _ in self.segments]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError(f"segment start times must be strictly increasing: {times}")
        if times and times[0] < 0:
            raise ScenarioError(f"segment start time must be >= 0: {times[0]}")


@dataclass(frozen=True)
class Scenario:
    ego_initial: AgentState
    agents: tuple[tuple[str, AgentKind, TrajectorySpec], ...]
    duration_us: int
    hazard_events: tuple[tuple[int, str, str], ...] = ()   # (time, agent_id, label)
    d_buffer_m: float = 3.0

    def __post_init__(self):
        if self.duration_us <= 0:
            raise ScenarioError(f"duration must be > 0, got {self.duration_us}")
        ids = [a[0] for a in self.agents]
        seen = set()
        for i in ids:
            if i in seen:
                raise ScenarioError(f"duplicate agent id: {i!r}")
            seen.add(i)
        for t, aid, _ in self.hazard_events:
            if t >= self.duration_us:
                raise ScenarioError(f"hazard time {t} not before duration {self.duration_us}")
            if aid not in seen:
                raise ScenarioError(f"hazard references unknown agent id: {aid!r}")

    def agent(self, agent_id: str) -> tuple[str, AgentKind, TrajectorySpec]:
        for a in self.agents:
            if a[0] == agent_id:
                return a
        raise KeyError(agent_id)


def _advance(s: float, v: float, a: float, dt_s: float) -> tuple[float, float]:
    """Advance (s, v) by dt under constant a, clamping v at zero."""
    if dt_s <= 0:
        return s, v
    if a < 0 and v > 0:
        t_stop = v / -a
        if dt_s >= t_stop:
            return s + v * t_stop + 0.5 * a * t_stop * t_stop, 0.0
    elif a < 0 and v == 0:
        return s, 0.0  # no reverse gear
    return s + v * dt_s + 0.5 * a * dt_s * dt_s, v + a * dt_s


def agent_state_at(traj: TrajectorySpec, t_us: int) -> AgentState:
    """State at time t by closed-form piecewise integration."""
    if t_us < 0:
        raise ValueError(f"t must be >= 0, got {t_us}")
    s, v = traj.initial.s_m, traj.initial.v_mps
    a = traj.initial.a_mps2
    now = 0
    for seg_start, seg_a in traj.segments:
        if seg_start >= t_us:
            break
        s, v = _advance(s, v, a, (seg_start - now) / US_PER_S)
        a = seg_a
        now = seg_start
    s, v = _advance(s, v, a, (t_us - now) / US_PER_S)
    eff_a = a if not (v == 0.0 and a < 0) else 0.0
    return AgentState(s_m=s, l_m=traj.initial.l_m, v_mps=v, a_mps2=eff_a,
                      lane_index=traj.initial.lane_index)


def visible_agents(scenario: Scenario, t_us: int, sensor_range_m: float,
                   ego_state: Optional[AgentState] = None):
    """Agents detectable at time t: visible_from reached and within range.

    Range is longitudinal distance from the ego in the lane frame.
    """
    if t_us > scenario.duration_us:
        raise ValueError(f"t {t_us} beyond scenario duration {scenario.duration_us}")
    ego = ego_state if ego_state is not None else ego_state_fallback(scenario, t_us)
    out = []
    for aid, kind, traj in scenario.agents:
        if traj.visible_from_us > t_us:
            continue
        st = agent_state_at(traj, t_us)
        if abs(st.s_m - ego.s_m) <= sensor_range_m:
            out.append((aid, kind, st))
    return out


def ego_state_fallback(scenario: Scenario, t_us: int) -> AgentState:
    """Ego state assuming no control intervention (initial trajectory only)."""
    return agent_state_at(TrajectorySpec(initial=scenario.ego_initial), t_us)


# ---------------------------------------------------------------------------
# traffic generation

DENSITY_RADIUS_M = 25.0
DEFAULT_KIND_MIX = ((AgentKind.VEHICLE, 0.7), (AgentKind.PEDESTRIAN, 0.2),
                    (AgentKind.CYCLIST, 0.1))


@dataclass(frozen=True)
class RoadSpec:
    length_m: float = 400.0
    lanes: int = 3
    speed_mps: float = 10.0


def generate_traffic(density: float, seed: int, road: RoadSpec,
                     kind_mix=DEFAULT_KIND_MIX) -> list[tuple[AgentKind, TrajectorySpec]]:
    """Synthetic background traffic, deterministic per seed.

    density is the expected agent count within DENSITY_RADIUS_M of the
    ego longitudinally (a 2*radius window). Agents are placed uniformly
    along the road, centered on the ego start, in non-ego lanes so they
    load the pipeline without forcing interactions.
    """
    if density < 0:
        raise ValueError(f"density must be >= 0, got {density}")
    if density == 0:
        return []
    stream = RandomStream(seed, "traffic-gen")
    window = 2.0 * DENSITY_RADIUS_M
    lam = density * road.length_m / window
    n = stream.poisson(lam)
    kinds = [k for k, _ in kind_mix]
    weights = [w for _, w in kind_mix]
    out = []
    for _ in range(n):
        s = stream.uniform(-road.length_m / 2.0, road.length_m / 2.0)
        lane = 1 if stream.uniform(0.0, 1.0) < 0.5 else -1
        kind = kinds[int(stream.choice(len(kinds), p=weights))]
        speed = road.speed_mps if kind == AgentKind.VEHICLE else road.speed_mps * 0.15
        st = AgentState(s_m=s, l_m=3.5 * lane, v_mps=speed, a_mps2=0.0, lane_index=lane)
        out.append((kind, TrajectorySpec(initial=st)))
    return out


# ---------------------------------------------------------------------------
# serialization (JSON, units in key names, versioned, unknown keys rejected)

def _check_keys(obj: dict, allowed: set[str], ctx: str):
    extra = set(obj) - allowed
    if extra:
        raise ScenarioError(f"{ctx}: unknown fields {sorted(extra)}")


def _state_to_json(st: AgentState) -> dict:
    return {"s_m": st.s_m, "l_m": st.l_m, "v_mps": st.v_mps,
            "a_mps2": st.a_mps2, "lane_index": st.lane_index}


def _state_from_json(obj: dict, ctx: str) -> AgentState:
    _check_keys(obj, {"s_m", "l_m", "v_mps", "a_mps2", "lane_index"}, ctx)
    try:
        return AgentState(s_m=float(obj["s_m"]), l_m=float(obj["l_m"]),
                          v_mps=float(obj["v_mps"]), a_mps2=float(obj["a_mps2"]),
                          lane_index=int(obj.get("lane_index", 0)))
    except KeyError as e:
        raise ScenarioError(f"{ctx}: missing field {e.args[0]!r}") from None


def scenario_to_json(sc: Scenario) -> dict:
    return {
        "format": SCENARIO_FORMAT,
        "ego": _state_to_json(sc.ego_initial),
        "agents": [
            {
                "id": aid,
                "kind": kind.value,
                "initial": _state_to_json(traj.initial),
                "segments": [{"start_us": t, "a_mps2": a} for t, a in traj.segments],
                "visible_from_us": traj.visible_from_us,
            }
            for aid, kind, traj in sc.agents
        ],
        "duration_us": sc.duration_us,
        "hazards": [{"time_us": t, "agent_id": aid, "label": lbl}
                    for t, aid, lbl in sc.hazard_events],
        "d_buffer_m": sc.d_buffer_m,
    }


def scenario_from_json(obj: dict) -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioError("scenario root must be an object")
    _check_keys(obj, {"format", "ego", "agents", "duration_us", "hazards", "d_buffer_m"},
                "scenario")
    if obj.get("format") != SCENARIO_FORMAT:
        raise ScenarioError(f"format: expected {SCENARIO_FORMAT}, got {obj.get('format')!r}")
    for key in ("ego", "duration_us"):
        if key not in obj:
            raise ScenarioError(f"scenario: missing field {key!r}")
    agents = []
    for i, a in enumerate(obj.get("agents", [])):
        ctx = f"agents[{i}]"
        _check_keys(a, {"id", "kind", "initial", "segments", "visible_from_us"}, ctx)
        try:
            kind = AgentKind(a["kind"])
        except (KeyError, ValueError):
            raise ScenarioError(f"{ctx}: bad kind {a.get('kind')!r}") from None
        segs = []
        for j, s in enumerate(a.get("segments", [])):
            _check_keys(s, {"start_us", "a_mps2"}, f"{ctx}.segments[{j}]")
            segs.append((int(s["start_us"]), float(s["a_mps2"])))
        traj = TrajectorySpec(initial=_state_from_json(a["initial"], f"{ctx}.initial"),
                              segments=tuple(segs),
                              visible_from_us=int(a.get("visible_from_us", 0)))
        agents.append((str(a["id"]), kind, traj))
    hazards = []
    for i, h in enumerate(obj.get("hazards", [])):
        _check_keys(h, {"time_us", "agent_id", "label"}, f"hazards[{i}]")
        hazards.append((int(h["time_us"]), str(h["agent_id"]), str(h.get("label", ""))))
    return Scenario(
        ego_initial=_state_from_json(obj["ego"], "ego"),
        agents=tuple(agents),
        duration_us=int(obj["duration_us"]),
        hazard_events=tuple(hazards),
        d_buffer_m=float(obj.get("d_buffer_m", 3.0)),
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"{path}: malformed JSON: {e}") from None
    return scenario_from_json(obj)


def save_scenario(sc: Scenario, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario_to_json(sc), f, indent=2, sort_keys=True)
        f.write("\n")
