"""Naive recursive robustness: one grid point at a time, straight from the textbook definitions.

Kept deliberately independent of autotamp.monitor: positions come from
``interpolate``, distances from ``signed_distance``, windows from plain
index arithmetic (interval bounds in the tests are grid multiples).
"""
import math
from functools import lru_cache

from autotamp import stl
from autotamp.geometry import interpolate, signed_distance


def naive_robustness(f, traj, env, dt=0.1):
    K = int(math.floor(traj.final_time / dt + 1e-9))
    times = [min(k * dt, traj.final_time) for k in range(K + 1)]

    def window(iv, k):
        lo = k + int(round(iv.lower / dt))
        hi = K if math.isinf(iv.upper) else min(K, k + int(round(iv.upper / dt)))
        return range(lo, hi + 1) if lo <= hi else range(0)

    @lru_cache(maxsize=None)
    def rho(node, k):
        if isinstance(node, stl.Predicate):
            best = -math.inf
            for name in traj.agents:
                hw = env.agent(name).half_width
                p = interpolate(traj, name, times[k])
                for r in env.resolve(node.region):
                    best = max(best, signed_distance(r, p, hw))
            return best if node.action == stl.ENTER else -best
        if isinstance(node, stl.Not):
            return -rho(node.child, k)
        if isinstance(node, stl.And):
            return min(rho(node.left, k), rho(node.right, k))
        if isinstance(node, stl.Or):
            return max(rho(node.left, k), rho(node.right, k))
        if isinstance(node, stl.Imply):
            return max(-rho(node.left, k), rho(node.right, k))
        if isinstance(node, stl.Equiv):
            a, b = rho(node.left, k), rho(node.right, k)
            return min(max(-a, b), max(-b, a))
        if isinstance(node, stl.Finally):
            return max((rho(node.child, j) for j in window(node.interval, k)), default=-math.inf)
        if isinstance(node, stl.Globally):
            return min((rho(node.child, j) for j in window(node.interval, k)), default=math.inf)
        if isinstance(node, stl.Until):
            best = -math.inf
            for j in window(node.interval, k):
                left = min(rho(node.left, i) for i in range(k, j + 1))
                best = max(best, min(rho(node.right, j), left))
            return best
        raise TypeError(node)

    return rho(f, 0)
