"""STL to MILP over a uniform time grid, and trajectory extraction.

Each formula node gets an indicator per (kind, step): a *point* indicator means
the node holds at time i*dt, a *segment* indicator means it holds at every
monitor sample of [i*dt, (i+1)*dt]. Predicates are linear in the waypoints and
regions are convex, so enforcing a predicate at both ends of a segment (same
region, or same separating face) makes it hold on the whole segment. That is
what lets the planner promise satisfaction under the sampled monitor.

Only predicate-level indicators (region choice, separating face, collision
axis) are binary. Boolean/temporal aggregators are continuous in [0, 1]: any
positive aggregator value forces at least one binary below it to 1, so
integral solutions are sound.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from . import milp, monitor, stl
from .diagnostics import Code, Diagnostic, DiagnosticError, error
from .geometry import AgentSpec, Environment, Region, Trajectory, interpolate

POINT, SEGMENT = "point", "segment"
_TRUE, _FALSE = "true", "false"
_EPS = 1e-9
WALLS = "walls"


@dataclass(frozen=True)
class PlanConfig:
    steps: int = 20
    horizon: float = 20.0
    robustness_margin: float = 0.05
    min_margin: float = 1e-3  # fallback floor; zero would accept plans grazing region boundaries
    big_M: float | None = None  # default: twice the workspace diagonal
    collision: bool = True
    secondary_objective_weight: float = 1e-3
    monitor_dt: float = monitor.DEFAULT_DT
    time_limit: float = 600.0  # solver wall-clock budget, seconds
    mip_gap: float | None = None  # absolute objective gap; None accepts the first full-margin plan
    node_limit: int | None = None  # branch-and-bound nodes per phase (deterministic budget)
    solver: str = "builtin"  # "builtin" or "highs"
    lp_engine: str = "simplex"

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if not self.robustness_margin > 0:
            raise ValueError("robustness_margin must be > 0")
        if not 0 <= self.min_margin <= self.robustness_margin:
            raise ValueError("min_margin must lie in [0, robustness_margin]")
        if self.ticks_per_step < 1 or abs(self.dt / self.monitor_dt - self.ticks_per_step) > 1e-6:
            raise ValueError(f"step length {self.dt:g} s (horizon/steps) must be a multiple of the "
                             f"monitor step {self.monitor_dt:g} s")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def ticks_per_step(self) -> int:
        return int(round(self.dt / self.monitor_dt))

    @classmethod
    def for_environment(cls, env: Environment, steps: int = 20, horizon: float | None = None,
                        **kw) -> "PlanConfig":
        """Config with the longest horizon not above the limit that splits into whole monitor ticks.

        The step count may drop to half of ``steps`` when that gets closer to the limit.
        """
        delta = kw.get("monitor_dt", monitor.DEFAULT_DT)
        if horizon is None:
            if not math.isfinite(env.time_limit):
                raise ValueError("environment has no time limit; pass a horizon")
            horizon = env.time_limit
        ticks = math.floor(horizon / delta + 1e-9)
        best = None
        for n in range(steps, (steps + 1) // 2 - 1, -1):
            if ticks // n >= 1 and (best is None or n * (ticks // n) > best[0] * best[1]):
                best = (n, ticks // n)
        if best is None:
            raise ValueError(f"horizon {horizon:g} s is shorter than {steps} monitor steps")
        n, k = best
        return cls(steps=n, horizon=round(n * k * delta, 9), **kw)


@dataclass
class VarMap:
    positions: dict[str, list[tuple[int, int]]]
    times: list[float]
    margin: int
    displacement: dict[str, list[int]] = field(default_factory=dict)
    predicates: dict[tuple, list[int]] = field(default_factory=dict)  # (pred, kind, step) -> binaries
    aggregators: dict[tuple, int] = field(default_factory=dict)  # (node, kind, step) -> var
    collision: dict[tuple, list[int]] = field(default_factory=dict)  # (a, b, step) -> binaries
    notes: list[Diagnostic] = field(default_factory=list)

    def binary_count(self) -> int:
        return sum(len(v) for v in self.predicates.values()) + sum(len(v) for v in self.collision.values())


@dataclass
class PlanResult:
    status: str  # "feasible", "infeasible", "limit-reached", "error"
    trajectory: Trajectory | None = None
    diagnostics: list[Diagnostic] = field(default_factory=list)
    robustness: float = math.nan
    objective: float = math.nan
    solve_time: float = 0.0
    node_count: int = 0
    num_variables: int = 0
    num_binaries: int = 0
    num_constraints: int = 0

    @property
    def feasible(self) -> bool:
        return self.trajectory is not None


class _Box:
    __slots__ = ("x0", "x1", "y0", "y1")

    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1

    def union(self, o: "_Box") -> "_Box":
        return _Box(min(self.x0, o.x0), max(self.x1, o.x1), min(self.y0, o.y0), max(self.y1, o.y1))


class _Compiler:
    def __init__(self, env: Environment, cfg: PlanConfig):
        self.env = env
        self.cfg = cfg
        self.N = cfg.steps
        self.m = cfg.ticks_per_step
        self.K = self.N * self.m
        self.dt = cfg.dt
        self.rho = cfg.robustness_margin
        self.bigM = cfg.big_M if cfg.big_M is not None else 2.0 * env.diagonal
        self.model = milp.MilpModel(name="stl_plan")
        self.memo: dict[tuple, object] = {}
        self.notes: list[Diagnostic] = []
        self.s = self.model.add_variable(0.0, self.rho, name="margin")
        self.pos: dict[str, list[tuple[int, int]]] = {}
        self.box: dict[str, list[_Box]] = {}
        self.vm = VarMap({}, [cfg.horizon * i / self.N for i in range(self.N + 1)], self.s)

    # -- motion variables --

    def build_motion(self):
        x0, x1, y0, y1 = self.env.workspace
        for a in self.env.agents:
            hw = a.half_width
            lo_x, hi_x, lo_y, hi_y = x0 + hw, x1 - hw, y0 + hw, y1 - hw
            sx, sy = a.start
            r = a.v_max * self.dt
            pts, boxes = [], []
            for i in range(self.N + 1):
                bx = _Box(max(lo_x, sx - r * i), min(hi_x, sx + r * i),
                          max(lo_y, sy - r * i), min(hi_y, sy + r * i))
                if i == 0:
                    bx = _Box(sx, sx, sy, sy)
                x = self.model.add_variable(bx.x0, bx.x1, name=f"x_{a.name}_{i}")
                y = self.model.add_variable(bx.y0, bx.y1, name=f"y_{a.name}_{i}")
                pts.append((x, y))
                boxes.append(bx)
            self.pos[a.name] = pts
            self.box[a.name] = boxes
            self.vm.positions[a.name] = pts
            # speed: inscribed octagon of the v_max*dt disc
            c8 = r * math.cos(math.pi / 8)
            disp = []
            for i in range(self.N):
                (xa, ya), (xb, yb) = pts[i], pts[i + 1]
                for k in range(8):
                    th = math.pi / 8 + k * math.pi / 4
                    cx, cy = math.cos(th), math.sin(th)
                    self.model.add_constraint([(xb, cx), (xa, -cx), (yb, cy), (ya, -cy)], "<=", c8,
                                              f"speed_{a.name}_{i}_{k}")
                e = self.model.add_variable(0.0, r, name=f"disp_{a.name}_{i}")
                for sgn in (1.0, -1.0):
                    self.model.add_constraint([(e, 1.0), (xb, -sgn), (xa, sgn)], ">=", 0.0)
                    self.model.add_constraint([(e, 1.0), (yb, -sgn), (ya, sgn)], ">=", 0.0)
                disp.append(e)
            self.vm.displacement[a.name] = disp

    def objective(self):
        w = self.cfg.secondary_objective_weight
        terms = [(self.s, 1.0)]
        for disp in self.vm.displacement.values():
            terms += [(e, -w) for e in disp]
        self.model.set_objective(terms, milp.MAX)

    # -- big-M helpers --

    def _min_act(self, terms) -> float:
        lo = 0.0
        for v, a in terms:
            var = self.model.variables[v]
            lo += a * (var.lower if a > 0 else var.upper)
        return lo

    def implied_ge(self, terms, rhs: float, z: int | None, name: str):
        """sum(terms) >= rhs whenever binary z is 1 (always, when z is None)."""
        if z is None:
            self.model.add_constraint(terms, ">=", rhs, name)
            return
        M = min(self.bigM, rhs - self._min_act(terms))
        if M <= 0:
            return
        self.model.add_constraint(list(terms) + [(z, -M)], ">=", rhs - M, name)

    # -- predicates --

    def _endpoints(self, kind: str, i: int) -> list[int]:
        return [i] if kind == POINT else [i, i + 1]

    def _agent_box(self, agent: str, steps: list[int]) -> _Box:
        b = self.box[agent][steps[0]]
        for k in steps[1:]:
            b = b.union(self.box[agent][k])
        return b

    def enter_pair(self, a: AgentSpec, r: Region, steps: list[int], tag: str) -> int:
        hw = a.half_width
        lx, hx, ly, hy = r.x_min + hw, r.x_max - hw, r.y_min + hw, r.y_max - hw
        reachable = lx <= hx and ly <= hy
        for k in steps:
            b = self.box[a.name][k]
            if b.x1 < lx or b.x0 > hx or b.y1 < ly or b.y0 > hy:
                reachable = False
        z = self.model.add_variable(0.0, 1.0 if reachable else 0.0, milp.BINARY, f"z_{tag}")
        if not reachable:
            return z
        s = self.s
        for k in steps:
            x, y = self.pos[a.name][k]
            self.implied_ge([(x, 1.0), (s, -1.0)], lx, z, f"in_{tag}_{k}_l")
            self.implied_ge([(x, -1.0), (s, -1.0)], -hx, z, f"in_{tag}_{k}_r")
            self.implied_ge([(y, 1.0), (s, -1.0)], ly, z, f"in_{tag}_{k}_b")
            self.implied_ge([(y, -1.0), (s, -1.0)], -hy, z, f"in_{tag}_{k}_t")
        return z

    def outside_pair(self, a: AgentSpec, r: Region, steps: list[int], tag: str):
        """Face binaries keeping the agent outside ``r`` (deflated) at every step; None if trivial."""
        hw = a.half_width
        lx, hx, ly, hy = r.x_min + hw, r.x_max - hw, r.y_min + hw, r.y_max - hw
        b = self._agent_box(a.name, steps)
        rho = self.rho
        # (face, trivially true, possible)
        faces = [
            ("l", b.x1 + rho <= lx, b.x0 <= lx),
            ("r", b.x0 - rho >= hx, b.x1 >= hx),
            ("b", b.y1 + rho <= ly, b.y0 <= ly),
            ("t", b.y0 - rho >= hy, b.y1 >= hy),
        ]
        if lx > hx + 2 * rho or ly > hy + 2 * rho or any(t for _, t, _ in faces):
            return None
        ds = []
        s = self.s
        for f, _, possible in faces:
            d = self.model.add_variable(0.0, 1.0 if possible else 0.0, milp.BINARY, f"d_{tag}_{f}")
            ds.append(d)
            if not possible:
                continue
            for k in steps:
                x, y = self.pos[a.name][k]
                if f == "l":
                    self.implied_ge([(x, -1.0), (s, -1.0)], -lx, d, f"out_{tag}_{k}_l")
                elif f == "r":
                    self.implied_ge([(x, 1.0), (s, -1.0)], hx, d, f"out_{tag}_{k}_r")
                elif f == "b":
                    self.implied_ge([(y, -1.0), (s, -1.0)], -ly, d, f"out_{tag}_{k}_b")
                else:
                    self.implied_ge([(y, 1.0), (s, -1.0)], hy, d, f"out_{tag}_{k}_t")
        return ds

    def predicate(self, p: stl.Predicate, kind: str, i: int):
        regions = self.env.resolve(p.region)
        steps = self._endpoints(kind, i)
        tag = f"{p.action}_{p.region}_{kind[0]}{i}"
        key = (str(p), kind, i)
        if p.action == stl.ENTER:
            zs = []
            for a in self.env.agents:
                for r in regions:
                    zs.append(self.enter_pair(a, r, steps, f"{tag}_{a.name}_{r.name}"))
            self.vm.predicates[key] = zs
            if not zs:
                return _FALSE
            if len(zs) == 1:
                return zs[0]
            y = self.model.add_variable(0.0, 1.0, name=f"agg_{tag}")
            self.model.add_constraint([(y, 1.0)] + [(z, -1.0) for z in zs], "<=", 0.0, f"or_{tag}")
            return y
        groups = []
        for a in self.env.agents:
            for r in regions:
                ds = self.outside_pair(a, r, steps, f"{tag}_{a.name}_{r.name}")
                if ds is not None:
                    groups.append(ds)
        self.vm.predicates[key] = [d for ds in groups for d in ds]
        if not groups:
            return _TRUE
        y = self.model.add_variable(0.0, 1.0, name=f"agg_{tag}")
        for g, ds in enumerate(groups):
            self.model.add_constraint([(d, 1.0) for d in ds] + [(y, -1.0)], ">=", 0.0, f"face_{tag}_{g}")
        return y

    # -- temporal windows (in monitor ticks) --

    def _ticks(self, iv: stl.TimeInterval) -> tuple[int, int]:
        lo, hi = monitor.window_offsets(iv, self.cfg.monitor_dt)
        return lo, (self.K if math.isinf(hi) else int(hi))

    def _cover(self, start: int, end: int) -> list[tuple[str, int]]:
        """Children that make a node hold at every tick of [start, end]."""
        m = self.m
        if start == end:
            return [(POINT, start // m)] if start % m == 0 else [(SEGMENT, start // m)]
        j0 = start // m
        j1 = max(j0, -(-end // m) - 1)
        return [(SEGMENT, j) for j in range(j0, min(j1, self.N - 1) + 1)]

    def _points_in(self, start: int, end: int) -> list[int]:
        m = self.m
        k0 = -(-start // m)
        k1 = min(end, self.K) // m
        return list(range(k0, k1 + 1))

    def _empty(self, f: stl.Formula, kind: str, i: int):
        self.notes.append(error(Code.EMPTY_WINDOW,
                                f"interval {f.interval} of '{type(f).__name__.lower()}' at t={i * self.dt:g} s "
                                f"({kind}) has no time inside the horizon {self.cfg.horizon:g} s"))

    def finally_children(self, f: stl.Finally, kind: str, i: int):
        lo, hi = self._ticks(f.interval)
        m, K = self.m, self.K
        if kind == POINT:
            start, end = i * m + lo, min(i * m + hi, K)
            if start > K:
                self._empty(f, kind, i)
                return None
            pts = self._points_in(start, end)
            return [(POINT, k) for k in pts] if pts else [(SEGMENT, start // m)]
        if (i + 1) * m + lo > K:
            self._empty(f, kind, i)
            return None
        pts = self._points_in((i + 1) * m + lo, min(i * m + hi, K))
        if pts:
            return [(POINT, k) for k in pts]
        j0 = i + -(-lo // m)
        j1 = min(i + hi // m, self.N - 1)
        return [(SEGMENT, j) for j in range(j0, j1 + 1)]

    def globally_children(self, f: stl.Globally, kind: str, i: int):
        lo, hi = self._ticks(f.interval)
        m, K = self.m, self.K
        start = i * m + lo
        if start > K:
            return []
        end = min((i if kind == POINT else i + 1) * m + hi, K)
        return self._cover(start, end)

    def until_terms(self, f: stl.Until, kind: str, i: int):
        """List of (psi child, [phi children]) alternatives."""
        lo, hi = self._ticks(f.interval)
        m, K = self.m, self.K

        def phi_upto(k_point: int):
            return [(POINT, i)] if k_point == i else [(SEGMENT, j) for j in range(i, k_point)]

        if kind == POINT:
            start, end = i * m + lo, min(i * m + hi, K)
            if start > K:
                self._empty(f, kind, i)
                return None
            pts = self._points_in(start, end)
            if pts:
                return [((POINT, k), phi_upto(k)) for k in pts]
            j = start // m
            return [((SEGMENT, j), [(SEGMENT, jj) for jj in range(i, j + 1)])]
        if (i + 1) * m + lo > K:
            self._empty(f, kind, i)
            return None
        pts = self._points_in((i + 1) * m + lo, min(i * m + hi, K))
        if pts:
            return [((POINT, k), [(SEGMENT, j) for j in range(i, k)]) for k in pts]
        j0 = i + -(-lo // m)
        j1 = min(i + hi // m, self.N - 1)
        return [((SEGMENT, j), [(SEGMENT, jj) for jj in range(i, j + 1)]) for j in range(j0, j1 + 1)]

    # -- indicators --

    def _and(self, inds: list, tag: str):
        if any(v == _FALSE for v in inds):
            return _FALSE
        vs = sorted({v for v in inds if v != _TRUE})
        if not vs:
            return _TRUE
        if len(vs) == 1:
            return vs[0]
        y = self.model.add_variable(0.0, 1.0, name=f"and_{tag}")
        for v in vs:
            self.model.add_constraint([(y, 1.0), (v, -1.0)], "<=", 0.0)
        return y

    def _or(self, inds: list, tag: str):
        if any(v == _TRUE for v in inds):
            return _TRUE
        vs = sorted({v for v in inds if v != _FALSE})
        if not vs:
            return _FALSE
        if len(vs) == 1:
            return vs[0]
        y = self.model.add_variable(0.0, 1.0, name=f"or_{tag}")
        self.model.add_constraint([(y, 1.0)] + [(v, -1.0) for v in vs], "<=", 0.0)
        return y

    def _disjuncts(self, f: stl.Formula, kind: str, i: int):
        """Alternatives of an Or/F/Until node as lists of (formula, kind, step) conjunctions."""
        if isinstance(f, stl.Or):
            out = []
            for c in (f.left, f.right):
                if isinstance(c, stl.Or):
                    out += self._disjuncts(c, kind, i)
                else:
                    out.append([(c, kind, i)])
            return out
        if isinstance(f, stl.Finally):
            ch = self.finally_children(f, kind, i)
            return None if ch is None else [[(f.child, k, j)] for k, j in ch]
        if isinstance(f, stl.Until):
            terms = self.until_terms(f, kind, i)
            if terms is None:
                return None
            return [[(f.right,) + psi] + [(f.left, k, j) for k, j in phis] for psi, phis in terms]
        raise TypeError(type(f))

    def ind(self, f: stl.Formula, kind: str, i: int):
        key = (f, kind, i)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        v = self._ind(f, kind, i)
        self.memo[key] = v
        if isinstance(v, int) and not isinstance(f, stl.Predicate):
            self.vm.aggregators[(str(f), kind, i)] = v
        return v

    def _ind(self, f, kind, i):
        tag = f"{kind[0]}{i}"
        if isinstance(f, stl.Predicate):
            return self.predicate(f, kind, i)
        if isinstance(f, stl.And):
            return self._and([self.ind(f.left, kind, i), self.ind(f.right, kind, i)], tag)
        if isinstance(f, stl.Globally):
            return self._and([self.ind(f.child, k, j) for k, j in self.globally_children(f, kind, i)], tag)
        if isinstance(f, (stl.Or, stl.Finally, stl.Until)):
            alts = self._disjuncts(f, kind, i)
            if alts is None:
                return _FALSE
            return self._or([self._and([self.ind(*c) for c in alt], tag) for alt in alts], tag)
        raise TypeError(f"formula not in negation normal form: {f}")

    def require(self, f: stl.Formula, kind: str, i: int):
        if isinstance(f, stl.And):
            self.require(f.left, kind, i)
            self.require(f.right, kind, i)
            return
        if isinstance(f, stl.Globally):
            for k, j in self.globally_children(f, kind, i):
                self.require(f.child, k, j)
            return
        if isinstance(f, (stl.Or, stl.Finally, stl.Until)):
            alts = self._disjuncts(f, kind, i)
            if alts is None:
                raise DiagnosticError(self.notes[-1:])
            inds = [self._and([self.ind(*c) for c in alt], f"{kind[0]}{i}") for alt in alts]
            if any(v == _TRUE for v in inds):
                return
            vs = sorted({v for v in inds if v != _FALSE})
            self.model.add_constraint([(v, 1.0) for v in vs], ">=", 1.0, f"req_{kind[0]}{i}")
            return
        v = self.ind(f, kind, i)
        if v == _TRUE:
            return
        self.model.add_constraint([] if v == _FALSE else [(v, 1.0)], ">=", 1.0, f"req_{kind[0]}{i}")

    # -- collisions --

    def collisions(self):
        agents = self.env.agents
        for ia, a in enumerate(agents):
            for b in agents[ia + 1:]:
                sep = a.half_width + b.half_width
                if sep <= 0:
                    continue
                for i in range(1, self.N + 1):
                    ba, bb = self.box[a.name][i], self.box[b.name][i]
                    if (ba.x0 - bb.x1 >= sep or bb.x0 - ba.x1 >= sep
                            or ba.y0 - bb.y1 >= sep or bb.y0 - ba.y1 >= sep):
                        continue
                    (xa, ya), (xb, yb) = self.pos[a.name][i], self.pos[b.name][i]
                    cs = []
                    for axis, (u, v) in enumerate([(xa, xb), (xb, xa), (ya, yb), (yb, ya)]):
                        c = self.model.add_binary(f"col_{a.name}_{b.name}_{i}_{axis}")
                        self.implied_ge([(u, 1.0), (v, -1.0)], sep, c, f"sep_{a.name}_{b.name}_{i}_{axis}")
                        cs.append(c)
                    self.model.add_constraint([(c, 1.0) for c in cs], ">=", 1.0)
                    self.vm.collision[(a.name, b.name, i)] = cs


def compile(f: stl.Formula, env: Environment, cfg: PlanConfig) -> tuple[milp.MilpModel, VarMap]:
    diags = stl.validate(f, env)
    if diags:
        raise DiagnosticError(diags)
    if not env.agents:
        raise DiagnosticError([error(Code.SCHEMA, "environment has no agents to plan for")])
    if math.isfinite(env.time_limit) and cfg.horizon > env.time_limit + _EPS:
        raise DiagnosticError([error(Code.TIME_LIMIT_VIOLATION,
                                     f"horizon {cfg.horizon:g} s exceeds the time limit {env.time_limit:g} s")])
    c = _Compiler(env, cfg)
    c.build_motion()
    c.require(stl.to_nnf(f), POINT, 0)
    if cfg.collision:
        c.collisions()
    c.objective()
    c.vm.notes = list(c.notes)
    # branching hint: decide binaries in time order
    for (_, _, i), vs in c.vm.predicates.items():
        for v in vs:
            c.model.set_priority(v, i)
    for (_, _, i), vs in c.vm.collision.items():
        for v in vs:
            c.model.set_priority(v, i)
    return c.model, c.vm


def extract(model: milp.MilpModel, vm: VarMap, values: Mapping[int, float]) -> Trajectory:
    wp = {}
    for name, pts in vm.positions.items():
        wp[name] = [(values[x], values[y], t) for (x, y), t in zip(pts, vm.times)]
    return Trajectory(wp)


def _solver(cfg: PlanConfig):
    if cfg.solver == "builtin":
        return milp.adapters.BuiltinSolver()
    return milp.adapters.get_solver(cfg.solver)


def _gap(model: milp.MilpModel, vm: VarMap, cfg: PlanConfig) -> float:
    if cfg.mip_gap is not None:
        return cfg.mip_gap
    # the whole secondary objective range: any plan at full margin is accepted
    total = sum(model.variables[e].upper for disp in vm.displacement.values() for e in disp)
    return cfg.secondary_objective_weight * total + 1e-6


def plan(f: stl.Formula, env: Environment, cfg: PlanConfig, solver=None) -> PlanResult:
    """Two phases: first with the margin fixed at its target, then with it free in [min_margin, target]."""
    try:
        model, vm = compile(f, env, cfg)
    except DiagnosticError as exc:
        return PlanResult("error", diagnostics=exc.diagnostics)
    solver = solver or _solver(cfg)
    t0 = time.perf_counter()
    gap = _gap(model, vm, cfg)
    rho = cfg.robustness_margin
    model.set_bounds(vm.margin, rho, rho)
    sc = milp.SolveConfig(time_limit=cfg.time_limit / 2, gap=gap, lp_engine=cfg.lp_engine,
                          node_limit=cfg.node_limit)
    sol = solver.solve(model, sc)
    nodes = sol.node_count
    if not sol.values:
        model.set_bounds(vm.margin, cfg.min_margin, rho)
        left = max(cfg.time_limit - (time.perf_counter() - t0), 0.0)
        sc = milp.SolveConfig(time_limit=left, gap=gap, lp_engine=cfg.lp_engine, node_limit=cfg.node_limit)
        sol = solver.solve(model, sc)
        nodes += sol.node_count
    stats = dict(solve_time=time.perf_counter() - t0, node_count=nodes, num_variables=model.num_variables,
                 num_binaries=len(model.binaries), num_constraints=len(model.constraints))
    if sol.status == milp.Status.INFEASIBLE:
        return PlanResult("infeasible", diagnostics=[error(
            Code.INFEASIBLE, "no trajectory on this time grid satisfies the specification "
                             f"({cfg.steps} steps over {cfg.horizon:g} s)")] + vm.notes, **stats)
    if not sol.values:
        return PlanResult("limit-reached", diagnostics=[error(
            Code.SOLVER_LIMIT, f"solver stopped ({sol.message or sol.status.value}) before finding a "
                               f"trajectory")] + vm.notes, **stats)
    traj = extract(model, vm, sol.values)
    rob = monitor.robustness(f, traj, env, 0.0, cfg.monitor_dt)
    status = "feasible" if sol.status == milp.Status.OPTIMAL else "limit-reached"
    return PlanResult(status, traj, list(vm.notes), rob, sol.objective_value, **stats)


# -- single sub-task executability --------------------------------------------

def walls_clause(env: Environment) -> stl.Formula | None:
    return stl.always(stl.not_enter(WALLS)) if env.has_region(WALLS) else None


def subtask_formula(region: str, t_rel: float, env: Environment, avoid: Sequence[str] = ()) -> stl.Formula:
    parts: list[stl.Formula] = [stl.eventually(stl.enter(region), t_rel, t_rel)]
    w = walls_clause(env)
    if w is not None:
        parts.append(w)
    parts += [stl.always(stl.not_enter(r)) for r in avoid]
    return stl.conj(*parts)


CONNECTIVITY_CELL = 0.05  # metres


def _free_space_disconnected(region: str, starts: Mapping[str, tuple[float, float]], env: Environment,
                             cfg: PlanConfig, avoid: Sequence[str]) -> bool:
    """True when no agent can reach ``region`` through space kept clear of walls and ``avoid``.

    Blocks only grid cells lying wholly inside some keep-out set (centres where a
    plan's margin would fall below ``min_margin``), so the free cells over-cover the
    real free space and a missing 8-connected path proves infeasibility. Time and
    speed are ignored; "reachable" here only means the planner has to decide.
    """
    names = ([WALLS] if env.has_region(WALLS) else []) + [n for n in avoid if env.has_region(n)]
    obstacles = [r for n in names for r in env.resolve(n)]
    m = cfg.min_margin
    h = CONNECTIVITY_CELL
    wx0, wx1, wy0, wy1 = env.workspace
    for a in env.agents:
        if a.name not in starts:
            continue
        hw = a.half_width
        x0, y0 = wx0 + hw, wy0 + hw
        nx = max(1, math.ceil((wx1 - hw - x0) / h - 1e-9))
        ny = max(1, math.ceil((wy1 - hw - y0) / h - 1e-9))
        lo_x, lo_y = x0 + h * np.arange(nx), y0 + h * np.arange(ny)
        hi_x, hi_y = lo_x + h, lo_y + h
        free = np.ones((nx, ny), dtype=bool)
        for r in obstacles:
            fx0, fx1, fy0, fy1 = r.x_min + hw - m, r.x_max - hw + m, r.y_min + hw - m, r.y_max - hw + m
            inx = (lo_x > fx0) & (hi_x < fx1)
            iny = (lo_y > fy0) & (hi_y < fy1)
            free &= ~(inx[:, None] & iny[None, :])
        labels, _ = ndimage.label(free, structure=np.ones((3, 3), dtype=int))
        sx, sy = starts[a.name]
        sl = labels[(lo_x <= sx) & (sx <= hi_x)][:, (lo_y <= sy) & (sy <= hi_y)]
        source = set(sl[sl > 0].tolist())
        for r in env.resolve(region):
            tx0, tx1, ty0, ty1 = r.x_min + hw + m, r.x_max - hw - m, r.y_min + hw + m, r.y_max - hw - m
            if tx0 > tx1 or ty0 > ty1:
                continue
            tl = labels[(hi_x >= tx0) & (lo_x <= tx1)][:, (hi_y >= ty0) & (lo_y <= ty1)]
            if source & set(tl[tl > 0].tolist()):
                return False
    return True


def subtask_plan(subtask: tuple[str, float], start_state, env: Environment, cfg: PlanConfig,
                 avoid: Sequence[str] = ()) -> PlanResult:
    """Plan one timed sub-task (be in ``region`` exactly ``t_rel`` after the start) from ``start_state``.

    ``start_state`` is one (x, y) for the first agent or a mapping agent -> (x, y).
    """
    region, t_rel = subtask
    if not t_rel > 0:
        raise ValueError("sub-task time must be positive")
    if isinstance(start_state, Mapping):
        agents = tuple(replace(a, start=tuple(start_state[a.name])) for a in env.agents)
    else:
        agents = (replace(env.agents[0], start=tuple(start_state)),)
    sub = Environment(env.workspace, env.regions, agents, math.inf, env.name)
    if env.has_region(region) and _free_space_disconnected(region, {a.name: a.start for a in agents}, sub, cfg,
                                                           avoid):
        blocked = ", ".join(([WALLS] if env.has_region(WALLS) else []) + list(avoid)) or "nothing"
        return PlanResult("infeasible", diagnostics=[error(
            Code.INFEASIBLE, f"{region} cannot be reached from the start without entering {blocked}")])
    delta = cfg.monitor_dt
    ticks = max(1, int(round(cfg.dt / delta)))
    total = int(math.ceil(t_rel / delta - 1e-9))
    steps = max(2, -(-total // ticks))
    sub_cfg = replace(cfg, steps=steps, horizon=round(steps * ticks * delta, 9), collision=False)
    return plan(subtask_formula(region, t_rel, env, avoid), sub, sub_cfg)


def state_at(traj: Trajectory, t: float) -> dict[str, tuple[float, float]]:
    return {name: interpolate(traj, name, t) for name in traj.agents}


def executability_check(subtask: tuple[str, float], start_state, env: Environment, cfg: PlanConfig,
                        avoid: Sequence[str] = ()) -> bool:
    """Can the agent(s) starting at ``start_state`` be in ``region`` exactly ``t_rel`` later?"""
    if not env.has_region(subtask[0]):
        return False
    return subtask_plan(subtask, start_state, env, cfg, avoid).feasible
