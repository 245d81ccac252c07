"""Best-bound branch and bound over binary variables."""
from __future__ import annotations

import heapq
import logging
import math
import time

import numpy as np
import scipy.sparse as sp

from . import simplex
from .model import BINARY, MAX, MilpModel, Solution, SolveConfig, Status

log = logging.getLogger(__name__)

DIVE_EVERY = 500  # nodes between repeated dives while there is no incumbent


class Propagator:
    """Activity-based bound propagation on the rows of ``A x (<=,==,>=) b``.

    Every row is brought to ``a x <= b`` form; one pass derives, for each
    (row, variable) entry, the bound implied by the minimum activity of the
    rest of the row. Binary bounds are rounded, continuous ones only move when
    the change is worth it (to avoid endless creeping).
    """

    def __init__(self, A, senses, rhs, is_bin):
        A = sp.csr_matrix(A, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        le = [i for i, s in enumerate(senses) if s in ("<=", "==")]
        ge = [i for i, s in enumerate(senses) if s in (">=", "==")]
        M = sp.vstack([A[le], -A[ge]]).tocsr()
        M.eliminate_zeros()
        self.b = np.concatenate([rhs[le], -rhs[ge]])
        self.rows = M.shape[0]
        self.n = A.shape[1]
        self.row = np.repeat(np.arange(self.rows), np.diff(M.indptr))
        self.col = M.indices
        self.val = M.data
        self.pos = self.val > 0
        self.is_bin = np.asarray(is_bin, dtype=bool)

    def run(self, lb, ub, passes: int = 20, feas_tol: float = 1e-6):
        """Returns (lb, ub, feasible); the inputs are not modified."""
        lb, ub = np.array(lb, dtype=float), np.array(ub, dtype=float)
        if np.any(lb > ub + feas_tol):
            return lb, ub, False
        if not self.rows:
            return lb, ub, True
        row, col, val, pos, ib = self.row, self.col, self.val, self.pos, self.is_bin
        slack = feas_tol * np.maximum(1.0, np.abs(self.b))
        for _ in range(passes):
            contrib = val * np.where(pos, lb[col], ub[col])
            inf = ~np.isfinite(contrib)
            finite = np.where(inf, 0.0, contrib)
            act = np.bincount(row, weights=finite, minlength=self.rows)
            ninf = np.bincount(row, weights=inf.astype(float), minlength=self.rows)
            if np.any((ninf == 0) & (act > self.b + slack)):
                return lb, ub, False
            usable = (ninf[row] - inf) == 0
            implied = (self.b[row] - (act[row] - finite)) / val
            new_ub = np.full(self.n, np.inf)
            new_lb = np.full(self.n, -np.inf)
            up = usable & pos
            dn = usable & ~pos
            np.minimum.at(new_ub, col[up], implied[up])
            np.maximum.at(new_lb, col[dn], implied[dn])
            new_ub[ib] = np.floor(new_ub[ib] + 1e-6)
            new_lb[ib] = np.ceil(new_lb[ib] - 1e-6)
            width = ub - lb
            span = np.where(np.isfinite(width), np.maximum(width, 1.0), 1.0)
            tighter_ub = np.where(ib, new_ub < ub - 0.5, new_ub < ub - 1e-4 * span)
            tighter_lb = np.where(ib, new_lb > lb + 0.5, new_lb > lb + 1e-4 * span)
            if not (tighter_ub.any() or tighter_lb.any()):
                break
            ub = np.where(tighter_ub, new_ub, ub)
            lb = np.where(tighter_lb, new_lb, lb)
            if np.any(lb > ub + feas_tol):
                return lb, ub, False
            cross = lb > ub
            if cross.any():
                mid = 0.5 * (lb[cross] + ub[cross])
                lb[cross] = mid
                ub[cross] = mid
        return lb, ub, True


def tighten_bounds(A, senses, rhs, lb, ub, is_bin, passes: int = 50):
    """Presolve bound tightening. Returns (lb, ub, feasible)."""
    return Propagator(A, senses, rhs, is_bin).run(lb, ub, passes)


def big_m_report(model: MilpModel) -> list[str]:
    """Rows with one binary whose relaxed form still cuts into the variable box.

    A big-M row is meant to become redundant when its binary switches it off;
    if the constant is too small it silently removes feasible points.
    """
    lb, ub = model.bounds()
    out = []
    for c in model.constraints:
        binterms = [(v, a) for v, a in c.terms if model.variables[v].kind == BINARY]
        if len(binterms) != 1:
            continue
        bv, ba = binterms[0]
        rest = [(v, a) for v, a in c.terms if v != bv]
        hi_act = sum(a * (ub[v] if a > 0 else lb[v]) for v, a in rest)
        lo_act = sum(a * (lb[v] if a > 0 else ub[v]) for v, a in rest)
        # off value of the binary is the one that loosens the row most
        if c.sense == "<=":
            ok = hi_act + min(0.0, ba) <= c.rhs + 1e-9
        elif c.sense == ">=":
            ok = lo_act + max(0.0, ba) >= c.rhs - 1e-9
        else:
            continue
        if not ok and math.isfinite(hi_act) and math.isfinite(lo_act):
            out.append(c.name)
    return out


class _HighsLP:
    """LP relaxations through scipy's HiGHS bindings (no warm start)."""

    def __init__(self, A, senses, rhs, c):
        A = sp.csr_matrix(A)
        le = [i for i, s in enumerate(senses) if s == "<="]
        ge = [i for i, s in enumerate(senses) if s == ">="]
        eq = [i for i, s in enumerate(senses) if s == "=="]
        self.A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if le or ge else None
        self.b_ub = np.concatenate([rhs[le], -rhs[ge]]) if le or ge else None
        self.A_eq = A[eq] if eq else None
        self.b_eq = rhs[eq] if eq else None
        self.c = np.asarray(c, dtype=float)

    def with_cost(self, c) -> "_HighsLP":
        other = object.__new__(_HighsLP)
        other.__dict__.update(self.__dict__)
        other.c = np.asarray(c, dtype=float)
        return other

    def solve(self, lb, ub, warm=None):
        from scipy.optimize import linprog

        res = linprog(self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=np.column_stack([lb, ub]), method="highs")
        iters = int(getattr(res, "nit", 0) or 0)
        if res.status == 0:
            return simplex.LPResult(simplex.OPTIMAL, res.x, float(res.fun), None, iters)
        if res.status == 2:
            return simplex.LPResult(simplex.INFEASIBLE, None, math.inf, None, iters)
        if res.status == 3:
            return simplex.LPResult(simplex.UNBOUNDED, None, -math.inf, None, iters)
        return simplex.LPResult(simplex.ITERATION_LIMIT, None, math.nan, None, iters)


def _engine(name, A, senses, rhs, c):
    if name == "simplex":
        return simplex.SimplexLP(A, senses, rhs, c)
    if name == "highs":
        return _HighsLP(A, senses, rhs, c)
    raise ValueError(f"unknown lp engine {name!r}")


def dive(lp, prop: Propagator, x, basis, lb, ub, bins, prio, max_lps: int, int_tol: float = 1e-6,
         deadline: float = math.inf):
    """Depth-first LP dive with propagation, used to find a first incumbent.

    At each level the fractional binary with the lowest priority class and the
    largest LP value is fixed to 1, or to 0 when 1 fails; a level where both
    values fail is backtracked. Returns (x, lp iterations, lps solved) with x
    None when the budget runs out or the dive proves nothing.
    """
    iters = lps = 0
    stack: list = []  # (lb, ub, x, basis, var, untried value or None)
    while lps < max_lps and time.perf_counter() < deadline:
        xb = x[bins]
        frac = np.abs(xb - np.round(xb))
        cand = np.nonzero((frac > int_tol) & (lb[bins] < ub[bins]))[0]
        if not len(cand):
            return x, iters, lps
        cand = cand[prio[cand] == prio[cand].min()]
        j = int(bins[cand[np.argmax(xb[cand])]])  # first index among ties
        stack.append((lb, ub, x, basis, j, 0.0))
        value = 1.0
        while True:
            nlb, nub = lb.copy(), ub.copy()
            nlb[j] = nub[j] = value
            nlb, nub, ok = prop.run(nlb, nub)
            if ok:
                res = lp.solve(nlb, nub, warm=basis)
                lps += 1
                iters += res.iterations
                ok = res.status == simplex.OPTIMAL
            if ok:
                lb, ub, x, basis = nlb, nub, res.x, res.basis
                break
            while stack and stack[-1][5] is None:
                stack.pop()
            if not stack or lps >= max_lps or time.perf_counter() > deadline:
                return None, iters, lps
            lb, ub, x, basis, j, value = stack.pop()
            stack.append((lb, ub, x, basis, j, None))
    return None, iters, lps


def solve(model: MilpModel, config: SolveConfig = SolveConfig()) -> Solution:
    t0 = time.perf_counter()
    sign = -1.0 if model.objective_sense == MAX else 1.0
    n = model.num_variables
    A = model.matrix()
    senses = model.senses()
    rhs = model.rhs()
    c = model.cost()
    lb, ub = model.bounds()
    is_bin = np.array([v.kind == BINARY for v in model.variables], dtype=bool)
    bins = np.nonzero(is_bin)[0]
    prio = np.array([model.priorities.get(int(j), 0) for j in bins], dtype=np.int64)

    note = ""
    if config.big_m_check:
        weak = big_m_report(model)
        if weak:
            note = f" [big-M too small in {len(weak)} rows, e.g. {', '.join(weak[:3])}]"

    def done(status, x=None, obj=math.nan, bound=math.nan, nodes=0, iters=0, trace=(), msg=""):
        values = {}
        if x is not None:
            values = {j: float(x[j]) for j in range(n)}
            obj = sign * obj + model.objective_constant
        return Solution(status, values, obj, sign * bound + model.objective_constant
                        if math.isfinite(bound) else bound, nodes, iters,
                        time.perf_counter() - t0, list(trace), msg + note)

    prop = Propagator(A, senses, rhs, is_bin)
    lb, ub, ok = prop.run(lb, ub, passes=50)
    if not ok:
        return done(Status.INFEASIBLE, msg="bound tightening proved infeasibility")
    lp = _engine(config.lp_engine, A, senses, rhs, c)
    iters = 0
    nodes = 0
    incumbent = None
    inc_obj = math.inf
    trace: list[float] = []

    def cutoff():
        if incumbent is None:
            return math.inf
        return inc_obj - max(config.gap, config.rel_gap * abs(inc_obj))

    def polish(x, basis, node_lb, node_ub):
        # fix binaries at their rounded values and re-solve for clean continuous values
        flb, fub = node_lb.copy(), node_ub.copy()
        r = np.round(x[bins])
        flb[bins] = r
        fub[bins] = r
        res = lp.solve(flb, fub, warm=basis)
        if res.status == simplex.OPTIMAL:
            xs = res.x.copy()
            xs[bins] = r
            return xs, res.iterations
        xs = x.copy()
        xs[bins] = r
        return xs, res.iterations

    le_rows = np.array([s == "<=" for s in senses], dtype=bool)
    ge_rows = np.array([s == ">=" for s in senses], dtype=bool)
    bnd_lb, bnd_ub = model.bounds()

    def violation(xs):
        r = A @ xs - rhs
        r = np.where(le_rows, np.maximum(r, 0), np.where(ge_rows, np.maximum(-r, 0), np.abs(r)))
        return max(float(r.max(initial=0.0)), float(np.max(bnd_lb - xs, initial=0.0)),
                   float(np.max(xs - bnd_ub, initial=0.0)))

    def offer(x, basis):
        nonlocal incumbent, inc_obj, iters
        xs, it = polish(x, basis, lb, ub)
        iters += it
        if violation(xs) > 10 * config.feas_tol * max(1.0, float(np.abs(xs).max(initial=0.0))):
            return
        obj = float(c @ xs)
        if obj < inc_obj:
            incumbent, inc_obj = xs, obj
            trace.append(sign * obj + model.objective_constant)
            for item in stack:
                heapq.heappush(heap, item)
            stack.clear()

    # open nodes: (bound, node id, binary lb, binary ub, parent basis). Until the
    # first incumbent they are explored depth first (latest first), afterwards by
    # best bound; the dive child is always solved next and reuses the parent's
    # factorisation.
    counter = 0
    heap: list = []
    stack: list = []
    root = (-math.inf, counter, lb[bins].copy(), ub[bins].copy(), None)
    next_node = root
    status_msg = ""
    limit = False
    while next_node is not None or heap or stack:
        if time.perf_counter() - t0 > config.time_limit or (config.node_limit is not None and nodes >= config.node_limit):
            limit = True
            break
        if next_node is not None:
            node, next_node = next_node, None
        elif stack:
            node = stack.pop()
        else:
            node = heapq.heappop(heap)
        bound, _, blb, bub, basis = node
        if bound >= cutoff():
            continue
        nlb, nub = lb.copy(), ub.copy()
        nlb[bins] = blb
        nub[bins] = bub
        nlb, nub, ok = prop.run(nlb, nub, passes=5)
        nodes += 1
        if not ok:
            continue
        res = lp.solve(nlb, nub, warm=basis)
        iters += res.iterations
        if res.status == simplex.UNBOUNDED:
            if nodes == 1:
                return done(Status.UNBOUNDED, nodes=nodes, iters=iters, msg="LP relaxation is unbounded")
            continue
        if res.status == simplex.ITERATION_LIMIT:
            status_msg = "LP iteration limit at a node"
            limit = True
            break
        if res.status != simplex.OPTIMAL or res.objective >= cutoff():
            continue
        x = res.x
        frac = np.abs(x[bins] - np.round(x[bins])) if len(bins) else np.zeros(0)
        if log.isEnabledFor(logging.DEBUG) and nodes % 100 == 0:
            log.debug("node %d lp %.6g fixed %d fractional %d open %d incumbent %.6g", nodes, res.objective,
                      int(np.sum(blb == bub)), int(np.sum(frac > config.int_tol)), len(heap) + len(stack),
                      inc_obj)
        if not len(bins) or frac.max() <= config.int_tol:
            offer(x, res.basis)
            continue
        if incumbent is None and config.dive_lps > 0 and (nodes == 1 or nodes % DIVE_EVERY == 0):
            xd, it, used = dive(lp, prop, x, res.basis, nlb, nub, bins, prio, config.dive_lps,
                                config.int_tol, deadline=t0 + config.time_limit)
            iters += it
            log.debug("dive at node %d %s after %d LPs", nodes, "succeeded" if xd is not None else "failed", used)
            if xd is not None:
                offer(xd, None)
                if res.objective >= cutoff():
                    continue
        k = int(np.argmax(frac))  # first index among ties
        j = bins[k]
        far_basis = res.basis.bare() if isinstance(res.basis, simplex.Basis) else res.basis
        counter += 1
        down = [res.objective, counter, blb.copy(), bub.copy(), res.basis]
        down[3][k] = 0.0
        counter += 1
        up = [res.objective, counter, blb.copy(), bub.copy(), res.basis]
        up[2][k] = 1.0
        near, far = (up, down) if x[j] >= 0.5 else (down, up)
        far[4] = far_basis
        if incumbent is None:
            stack.append(tuple(far))
        else:
            heapq.heappush(heap, tuple(far))
        next_node = tuple(near)
    best_bound = inc_obj
    if limit:
        pending = [h[0] for h in heap + stack] + ([next_node[0]] if next_node is not None else [])
        best_bound = min(pending + [inc_obj]) if pending else inc_obj
        if incumbent is None:
            return done(Status.LIMIT_REACHED, nodes=nodes, iters=iters, bound=best_bound,
                        msg=status_msg or "limit reached before finding a feasible point")
        return done(Status.LIMIT_REACHED, incumbent, inc_obj, best_bound, nodes, iters, trace,
                    status_msg or "limit reached")
    if incumbent is None:
        return done(Status.INFEASIBLE, nodes=nodes, iters=iters, msg="no feasible assignment")
    return done(Status.OPTIMAL, incumbent, inc_obj, best_bound, nodes, iters, trace)
