"""Environments made of named axis-aligned rectangles, and timed-waypoint trajectories."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .diagnostics import Code, Diagnostic, DiagnosticError, error
from .stl import normalize_name

# attribute key that puts a region into a named union (e.g. every wall piece has group "walls")
GROUP_KEY = "group"


@dataclass(frozen=True)
class Region:
    name: str
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    attributes: Mapping[str, str] = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "name", normalize_name(self.name))
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"region {self.name!r} has empty extent")

    @property
    def rect(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def group(self) -> str | None:
        g = self.attributes.get(GROUP_KEY)
        return normalize_name(g) if g else None

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class AgentSpec:
    name: str
    start: tuple[float, float]
    half_width: float = 0.0
    v_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "start", (float(self.start[0]), float(self.start[1])))
        if self.half_width < 0:
            raise ValueError(f"agent {self.name!r}: half_width must be >= 0")
        if not self.v_max > 0:
            raise ValueError(f"agent {self.name!r}: v_max must be > 0")


@dataclass(frozen=True)
class Environment:
    workspace: tuple[float, float, float, float]
    regions: tuple[Region, ...] = ()
    agents: tuple[AgentSpec, ...] = ()
    time_limit: float = math.inf
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "workspace", tuple(float(v) for v in self.workspace))
        diags = _check_environment(self)
        if diags:
            raise DiagnosticError(diags)

    # name resolution: a predicate name is a region name or a group tag
    def resolve(self, name: str) -> tuple[Region, ...]:
        key = normalize_name(name)
        direct = tuple(r for r in self.regions if r.name == key)
        if direct:
            return direct
        return tuple(r for r in self.regions if r.group == key)

    def has_region(self, name: str) -> bool:
        return bool(self.resolve(name))

    def region_names(self) -> list[str]:
        names = {r.name for r in self.regions}
        names.update(r.group for r in self.regions if r.group)
        return sorted(names)

    def region(self, name: str) -> Region:
        key = normalize_name(name)
        for r in self.regions:
            if r.name == key:
                return r
        raise KeyError(name)

    def agent(self, name: str) -> AgentSpec:
        for a in self.agents:
            if a.name == name:
                return a
        raise KeyError(name)

    @property
    def diagonal(self) -> float:
        x0, x1, y0, y1 = self.workspace
        return math.hypot(x1 - x0, y1 - y0)

    def with_agents(self, agents: Iterable[AgentSpec]) -> "Environment":
        return Environment(self.workspace, self.regions, tuple(agents), self.time_limit, self.name)

    def with_time_limit(self, time_limit: float) -> "Environment":
        return Environment(self.workspace, self.regions, self.agents, time_limit, self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "workspace": list(self.workspace),
            "time_limit": self.time_limit if math.isfinite(self.time_limit) else "inf",
            "regions": [
                {"name": r.name, "rect": list(r.rect), "attributes": dict(r.attributes)}
                for r in self.regions
            ],
            "agents": [
                {"name": a.name, "start": list(a.start), "half_width": a.half_width, "v_max": a.v_max}
                for a in self.agents
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check_environment(env: Environment) -> list[Diagnostic]:
    out = []
    x0, x1, y0, y1 = env.workspace
    if not (x0 < x1 and y0 < y1):
        return [error(Code.SCHEMA, f"workspace {list(env.workspace)} has empty extent")]
    names = set()
    for r in env.regions:
        if r.name in names:
            out.append(error(Code.INVALID_REGION, f"region name '{r.name}' is used twice"))
        names.add(r.name)
        if r.x_min < x0 or r.x_max > x1 or r.y_min < y0 or r.y_max > y1:
            out.append(error(Code.REGION_OUTSIDE_WORKSPACE,
                             f"region '{r.name}' {list(r.rect)} extends outside the workspace"))
    for a in env.agents:
        ax, ay = a.start
        if not (x0 <= ax <= x1 and y0 <= ay <= y1):
            out.append(error(Code.START_OUTSIDE_WORKSPACE,
                             f"agent '{a.name}' starts at {list(a.start)} outside the workspace"))
    for i, a in enumerate(env.agents):
        for b in env.agents[i + 1:]:
            gap = max(abs(a.start[0] - b.start[0]), abs(a.start[1] - b.start[1]))
            if gap < a.half_width + b.half_width:
                out.append(error(Code.OVERLAPPING_START,
                                 f"agents '{a.name}' and '{b.name}' overlap at their start positions"))
    if len({a.name for a in env.agents}) != len(env.agents):
        out.append(error(Code.SCHEMA, "agent names must be unique"))
    if not (env.time_limit > 0):
        out.append(error(Code.SCHEMA, f"time_limit must be positive, got {env.time_limit}"))
    return out


def _number(value, what: str) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinite", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"{what} must be a number, got {value!r}")
    return float(value)


def environment_from_dict(data: Mapping) -> Environment:
    """Build an Environment from the JSON schema; raises DiagnosticError listing every problem."""
    diags: list[Diagnostic] = []

    def bad(msg: str, code: Code = Code.SCHEMA):
        diags.append(error(code, msg))

    if not isinstance(data, Mapping):
        raise DiagnosticError([error(Code.SCHEMA, "environment must be a JSON object")])
    for key in ("workspace", "regions", "agents"):
        if key not in data:
            bad(f"missing top-level key '{key}'")
    if diags:
        raise DiagnosticError(diags)
    try:
        ws = [_number(v, "workspace entry") for v in data["workspace"]]
        if len(ws) != 4:
            raise TypeError("workspace needs 4 numbers [x_min, x_max, y_min, y_max]")
    except TypeError as exc:
        raise DiagnosticError([error(Code.SCHEMA, str(exc))]) from None
    time_limit = math.inf
    try:
        time_limit = _number(data.get("time_limit", "inf"), "time_limit")
    except TypeError as exc:
        bad(str(exc))

    regions = []
    for i, item in enumerate(data["regions"] or []):
        try:
            rect = [_number(v, "rect entry") for v in item["rect"]]
            if len(rect) != 4:
                raise TypeError("rect needs 4 numbers [x_min, x_max, y_min, y_max]")
            attrs = {str(k): str(v) for k, v in dict(item.get("attributes", {})).items()}
            regions.append(Region(item["name"], *rect, attributes=attrs))
        except (KeyError, TypeError) as exc:
            bad(f"region #{i}: {exc}")
        except ValueError as exc:
            bad(f"region #{i} ({item.get('name')!r}): {exc}; rect must satisfy x_min < x_max, y_min < y_max",
                Code.INVALID_REGION)

    agents = []
    for i, item in enumerate(data["agents"] or []):
        try:
            agents.append(AgentSpec(
                str(item["name"]),
                tuple(_number(v, "start entry") for v in item["start"]),
                _number(item.get("half_width", 0.0), "half_width"),
                _number(item.get("v_max", 1.0), "v_max"),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            bad(f"agent #{i}: {exc}")
    if diags:
        raise DiagnosticError(diags)
    return Environment(tuple(ws), tuple(regions), tuple(agents), time_limit, str(data.get("name", "")))


def load_environment(text: str) -> Environment:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DiagnosticError([error(Code.SCHEMA, f"environment file is not valid JSON: {exc}")]) from None
    return environment_from_dict(data)


def signed_distance(r: Region, p: Sequence[float], inflation: float = 0.0) -> float:
    """L-inf signed distance of ``p`` to ``r`` shrunk by ``inflation`` on every side.

    Positive inside (an agent of that half-width fits entirely in ``r``), negative
    outside, zero on the boundary. Negative ``inflation`` grows the region.
    """
    x, y = p[0], p[1]
    return min(x - (r.x_min + inflation), (r.x_max - inflation) - x,
               y - (r.y_min + inflation), (r.y_max - inflation) - y)


def signed_distance_array(r: Region, xs: np.ndarray, ys: np.ndarray, inflation: float = 0.0) -> np.ndarray:
    return np.minimum(np.minimum(xs - (r.x_min + inflation), (r.x_max - inflation) - xs),
                      np.minimum(ys - (r.y_min + inflation), (r.y_max - inflation) - ys))


# -- trajectories -------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Per-agent waypoints (x, y, t); positions in between are linear interpolations."""

    waypoints: Mapping[str, tuple[tuple[float, float, float], ...]]

    def __post_init__(self):
        clean = {}
        for name, pts in self.waypoints.items():
            clean[str(name)] = tuple((float(x), float(y), float(t)) for x, y, t in pts)
        object.__setattr__(self, "waypoints", clean)
        problems = self.problems()
        if problems:
            raise DiagnosticError(problems)

    def problems(self) -> list[Diagnostic]:
        out = []
        finals = set()
        for name, pts in self.waypoints.items():
            if not pts:
                out.append(error(Code.BAD_TRAJECTORY, f"agent '{name}' has no waypoints"))
                continue
            if pts[0][2] != 0.0:
                out.append(error(Code.BAD_TRAJECTORY, f"agent '{name}' must start at t=0, starts at "
                                                      f"t={pts[0][2]}"))
            for a, b in zip(pts, pts[1:]):
                if not b[2] > a[2]:
                    out.append(error(Code.BAD_TRAJECTORY,
                                     f"agent '{name}': timestamps must strictly increase ({a[2]} -> {b[2]})"))
                    break
            finals.add(pts[-1][2])
        if len(finals) > 1:
            out.append(error(Code.BAD_TRAJECTORY, f"agents end at different times {sorted(finals)}"))
        return out

    @property
    def agents(self) -> list[str]:
        return list(self.waypoints)

    @property
    def final_time(self) -> float:
        if not self.waypoints:
            return 0.0
        return next(iter(self.waypoints.values()))[-1][2]

    def to_dict(self) -> dict:
        return {name: [list(p) for p in pts] for name, pts in self.waypoints.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "Trajectory":
        if not isinstance(data, Mapping):
            raise DiagnosticError([error(Code.SCHEMA, "trajectory must be a JSON object {agent: [[x, y, t], ...]}")])
        try:
            return cls({k: [tuple(p) for p in v] for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DiagnosticError):
                raise
            raise DiagnosticError([error(Code.SCHEMA, f"bad trajectory waypoint list: {exc}")]) from None

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DiagnosticError([error(Code.SCHEMA, f"trajectory is not valid JSON: {exc}")]) from None


def _segment(pts, t: float) -> int:
    # index k of the segment [t_k, t_k+1] holding t
    lo, hi = 0, len(pts) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pts[mid][2] <= t:
            lo = mid
        else:
            hi = mid
    return lo


def interpolate(traj: Trajectory, agent: str, t: float) -> tuple[float, float]:
    pts = traj.waypoints[agent]
    if not (0.0 <= t <= pts[-1][2]):
        raise ValueError(f"t={t} outside [0, {pts[-1][2]}]")
    if len(pts) == 1:
        return pts[0][0], pts[0][1]
    k = _segment(pts, t)
    x0, y0, t0 = pts[k]
    x1, y1, t1 = pts[k + 1]
    if t == t0:
        return x0, y0
    if t == t1:
        return x1, y1
    s = (t - t0) / (t1 - t0)
    return x0 + (x1 - x0) * s, y0 + (y1 - y0) * s


def sample(traj: Trajectory, agent: str, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``interpolate``; same arithmetic, so results match it bit for bit."""
    pts = np.asarray(traj.waypoints[agent], dtype=float)
    times = np.asarray(times, dtype=float)
    if len(pts) == 1:
        return np.full(times.shape, pts[0, 0]), np.full(times.shape, pts[0, 1])
    tw = pts[:, 2]
    k = np.clip(np.searchsorted(tw, times, side="right") - 1, 0, len(pts) - 2)
    x0, y0, t0 = pts[k, 0], pts[k, 1], pts[k, 2]
    x1, y1, t1 = pts[k + 1, 0], pts[k + 1, 1], pts[k + 1, 2]
    s = (times - t0) / (t1 - t0)
    xs = x0 + (x1 - x0) * s
    ys = y0 + (y1 - y0) * s
    at0, at1 = times == t0, times == t1
    xs = np.where(at0, x0, np.where(at1, x1, xs))
    ys = np.where(at0, y0, np.where(at1, y1, ys))
    return xs, ys


SPEED_TOL = 1e-6


def check_kinematics(traj: Trajectory, env: Environment) -> list[Diagnostic]:
    out = []
    for name, pts in traj.waypoints.items():
        try:
            v_max = env.agent(name).v_max
        except KeyError:
            out.append(error(Code.BAD_TRAJECTORY, f"trajectory agent '{name}' is not in the environment"))
            continue
        for k, (a, b) in enumerate(zip(pts, pts[1:])):
            speed = math.hypot(b[0] - a[0], b[1] - a[1]) / (b[2] - a[2])
            if speed > v_max + SPEED_TOL:
                out.append(error(Code.SPEED_VIOLATION,
                                 f"agent '{name}' segment {k} ({a[0]:g}, {a[1]:g}, t={a[2]:g}) -> "
                                 f"({b[0]:g}, {b[1]:g}, t={b[2]:g}) moves at {speed:.4g} m/s, "
                                 f"above v_max {v_max:g} m/s"))
    if math.isfinite(env.time_limit) and traj.final_time > env.time_limit + 1e-9:
        out.append(error(Code.TIME_LIMIT_VIOLATION,
                         f"trajectory ends at t={traj.final_time:g} s, after the time limit "
                         f"{env.time_limit:g} s"))
    return out


def check_starts(traj: Trajectory, env: Environment, tol: float = 1e-6) -> list[Diagnostic]:
    """Each agent's first waypoint must be its start position."""
    out = []
    for a in env.agents:
        pts = traj.waypoints.get(a.name)
        if pts is None:
            out.append(error(Code.BAD_TRAJECTORY, f"trajectory has no waypoints for agent '{a.name}'"))
        elif max(abs(pts[0][0] - a.start[0]), abs(pts[0][1] - a.start[1])) > tol:
            out.append(error(Code.BAD_TRAJECTORY,
                             f"agent '{a.name}' must start at {list(a.start)}, trajectory starts at "
                             f"{[pts[0][0], pts[0][1]]}"))
    return out
