"""Discrete-time STL robustness over interpolated trajectories.

Signals are evaluated on the grid ``k * dt`` (k = 0..K, K = floor(final/dt)).
Interval bounds are snapped outward to the grid: lower index floor(a/dt),
upper index ceil(b/dt). Windows are clipped to the trajectory horizon; an empty
window gives -inf for finally/until and +inf for globally.
"""
from __future__ import annotations

import math

import numpy as np

from . import stl
from .diagnostics import DiagnosticError
from .geometry import Environment, Trajectory, check_kinematics, check_starts, sample, signed_distance_array

DEFAULT_DT = 0.1
SAT_TOL = 1e-6
_SNAP = 1e-9


def grid(final_time: float, dt: float = DEFAULT_DT) -> np.ndarray:
    k = int(math.floor(final_time / dt + _SNAP))
    # k * dt can overshoot the final time by an ulp; never sample past the end
    return np.minimum(np.arange(k + 1) * dt, final_time)


def window_offsets(iv: stl.TimeInterval, dt: float) -> tuple[int, float]:
    """Grid offsets (lo, hi) for an interval; hi is inf when unbounded."""
    lo = int(math.floor(iv.lower / dt + _SNAP))
    hi = math.inf if math.isinf(iv.upper) else int(math.ceil(iv.upper / dt - _SNAP))
    return lo, hi


def _shift(sig: np.ndarray, o: int, fill: float) -> np.ndarray:
    # out[i] = sig[i + o], padded with ``fill`` past the end
    out = np.full_like(sig, fill)
    if o < len(sig):
        out[: len(sig) - o] = sig[o:]
    return out


def _window_reduce(sig: np.ndarray, lo: int, hi: float, fn, fill: float) -> np.ndarray:
    n = len(sig)
    if math.isinf(hi) or hi >= n - 1:
        # unbounded (or reaching past the end): suffix reduction from i + lo
        suffix = fn.accumulate(sig[::-1])[::-1]
        return _shift(suffix, lo, fill)
    acc = np.full_like(sig, fill)
    for o in range(lo, int(hi) + 1):
        acc = fn(acc, _shift(sig, o, fill))
    return acc


class _Evaluator:
    def __init__(self, traj: Trajectory, env: Environment, dt: float):
        self.env = env
        self.dt = dt
        self.times = grid(traj.final_time, dt)
        self.positions = {}
        for name in traj.agents:
            try:
                hw = env.agent(name).half_width
            except KeyError:
                hw = 0.0
            xs, ys = sample(traj, name, self.times)
            self.positions[name] = (xs, ys, hw)
        self.cache: dict[stl.Formula, np.ndarray] = {}

    def region_signal(self, name: str) -> np.ndarray:
        regions = self.env.resolve(name)
        if not regions:
            raise DiagnosticError(stl.validate(stl.enter(name), self.env))
        out = np.full(len(self.times), -np.inf)
        for xs, ys, hw in self.positions.values():
            for r in regions:
                out = np.maximum(out, signed_distance_array(r, xs, ys, hw))
        return out

    def signal(self, f: stl.Formula) -> np.ndarray:
        hit = self.cache.get(f)
        if hit is not None:
            return hit
        s = self._signal(f)
        self.cache[f] = s
        return s

    def _signal(self, f: stl.Formula) -> np.ndarray:
        if isinstance(f, stl.Predicate):
            s = self.region_signal(f.region)
            return s if f.action == stl.ENTER else -s
        if isinstance(f, stl.Not):
            return -self.signal(f.child)
        if isinstance(f, stl.And):
            return np.minimum(self.signal(f.left), self.signal(f.right))
        if isinstance(f, stl.Or):
            return np.maximum(self.signal(f.left), self.signal(f.right))
        if isinstance(f, stl.Imply):
            return np.maximum(-self.signal(f.left), self.signal(f.right))
        if isinstance(f, stl.Equiv):
            a, b = self.signal(f.left), self.signal(f.right)
            return np.minimum(np.maximum(-a, b), np.maximum(-b, a))
        if isinstance(f, stl.Finally):
            lo, hi = window_offsets(f.interval, self.dt)
            return _window_reduce(self.signal(f.child), lo, hi, np.maximum, -np.inf)
        if isinstance(f, stl.Globally):
            lo, hi = window_offsets(f.interval, self.dt)
            return _window_reduce(self.signal(f.child), lo, hi, np.minimum, np.inf)
        if isinstance(f, stl.Until):
            return self._until(f)
        raise TypeError(f"not an STL formula: {f!r}")

    def _until(self, f: stl.Until) -> np.ndarray:
        phi, psi = self.signal(f.left), self.signal(f.right)
        lo, hi = window_offsets(f.interval, self.dt)
        n = len(phi)
        last = n - 1 if math.isinf(hi) else min(int(hi), n - 1)
        acc = np.full(n, -np.inf)
        running = np.full(n, np.inf)  # min of phi over [i, i + o]
        for o in range(0, last + 1):
            running = np.minimum(running, _shift(phi, o, -np.inf))
            if o >= lo:
                acc = np.maximum(acc, np.minimum(_shift(psi, o, -np.inf), running))
        return acc


def _checked(f: stl.Formula, env: Environment):
    diags = stl.validate(f, env)
    if diags:
        raise DiagnosticError(diags)


def robustness_signal(f: stl.Formula, traj: Trajectory, env: Environment,
                      dt: float = DEFAULT_DT) -> np.ndarray:
    _checked(f, env)
    return _Evaluator(traj, env, dt).signal(f)


def robustness(f: stl.Formula, traj: Trajectory, env: Environment, t: float = 0.0,
               dt: float = DEFAULT_DT) -> float:
    """Robustness of ``f`` at time ``t`` (snapped to the nearest grid point).

    For several agents, enter(R) holds if any agent is inside R, and
    not_enter(R) if none is.
    """
    if not (0.0 <= t <= traj.final_time + _SNAP):
        raise ValueError(f"t={t} outside [0, {traj.final_time}]")
    sig = robustness_signal(f, traj, env, dt)
    k = min(int(round(t / dt)), len(sig) - 1)
    return float(sig[k])


def violations(f: stl.Formula, traj: Trajectory, env: Environment, dt: float = DEFAULT_DT) -> list[str]:
    """Human-readable reasons a trajectory fails ``f``; empty when it satisfies it."""
    out = [d.message for d in check_starts(traj, env)]
    out += [d.message for d in check_kinematics(traj, env)]
    rho = robustness(f, traj, env, 0.0, dt)
    if rho < -SAT_TOL:
        out.append(f"the specification is violated (robustness {rho:.4g} < 0)")
    return out


def satisfied(f: stl.Formula, traj: Trajectory, env: Environment, dt: float = DEFAULT_DT) -> bool:
    return not violations(f, traj, env, dt)


# -- region occupancy ---------------------------------------------------------

OPEN_SPACE = "open_space"


def _innermost(env: Environment, x: float, y: float) -> str:
    inside = [r for r in env.regions if r.contains(x, y)]
    if not inside:
        return OPEN_SPACE
    return min(inside, key=lambda r: (r.area, r.name)).name


def state_sequence(traj: Trajectory, env: Environment, dt: float = DEFAULT_DT) -> dict[str, list[tuple[str, float]]]:
    """Per agent, run-length list of (innermost region, entry time) along the grid."""
    times = grid(traj.final_time, dt)
    out = {}
    for name in traj.agents:
        xs, ys = sample(traj, name, times)
        seq: list[tuple[str, float]] = []
        for t, x, y in zip(times, xs, ys):
            here = _innermost(env, float(x), float(y))
            if not seq or seq[-1][0] != here:
                seq.append((here, round(float(t), 9)))
        out[name] = seq
    return out


def _fmt_time(t: float) -> str:
    return stl.format_number(round(t, 6))


def render_state_sequence(seq: dict[str, list[tuple[str, float]]]) -> str:
    def one(items):
        return "[" + ", ".join(f"[in({r}), {_fmt_time(t)}]" for r, t in items) + "]"

    if len(seq) == 1:
        return one(next(iter(seq.values())))
    return "\n".join(f"{name}: {one(items)}" for name, items in seq.items())
