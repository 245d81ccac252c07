"""Bounded revised simplex (primal and dual) for min c'x, A x (<=,=,>=) b, lb <= x <= ub.

Each row gets a logical (slack) variable so the working form is
``[A I] (x, s) = b`` with bounds on both. The basis inverse is kept as a sparse
LU factorisation plus a product-form eta file, refactored periodically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"

BASIC, AT_LOWER, AT_UPPER, FREE = 0, 1, 2, 3

FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
ART_BOUND = 1e7  # stand-in bound for free nonbasic variables during dual phase
REFACTOR_EVERY = 64
DEGENERATE_LIMIT = 1000


@dataclass
class Basis:
    head: np.ndarray  # basic variable per row
    status: np.ndarray  # per variable (structural then logical)
    # factorisation of this basis, reused by a warm start when present
    lu: object = field(default=None, repr=False, compare=False)
    etas: tuple = field(default=(), repr=False, compare=False)

    def bare(self) -> "Basis":
        return Basis(self.head, self.status)


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    basis: Basis | None
    iterations: int
    duals: np.ndarray | None = None


class _Singular(Exception):
    pass


class SimplexLP:
    """Static LP data; ``solve`` can be called with different variable bounds."""

    def __init__(self, A, senses, rhs, c):
        A = sp.csc_matrix(A, dtype=float)
        self.m, self.n = A.shape
        self.A = A
        self.AT = A.T.tocsr()
        self.AI = sp.hstack([A, sp.identity(self.m, format="csc")], format="csc")
        self.b = np.asarray(rhs, dtype=float)
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(self.m)])
        slo = np.zeros(self.m)
        shi = np.zeros(self.m)
        for i, s in enumerate(senses):
            # a x + s = b
            if s == "<=":
                slo[i], shi[i] = 0.0, math.inf
            elif s == ">=":
                slo[i], shi[i] = -math.inf, 0.0
            else:
                slo[i], shi[i] = 0.0, 0.0
        self.slack_lo, self.slack_hi = slo, shi

    def with_cost(self, c) -> "SimplexLP":
        """Same constraints, different objective (matrix data is shared)."""
        other = object.__new__(SimplexLP)
        other.__dict__.update(self.__dict__)
        other.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(self.m)])
        return other

    def column(self, j: int) -> np.ndarray:
        v = np.zeros(self.m)
        if j < self.n:
            s, e = self.A.indptr[j], self.A.indptr[j + 1]
            v[self.A.indices[s:e]] = self.A.data[s:e]
        else:
            v[j - self.n] = 1.0
        return v

    def row_products(self, rho: np.ndarray) -> np.ndarray:
        """rho' [A I] for all variables."""
        return np.concatenate([self.AT @ rho, rho])

    def solve(self, lb, ub, warm: Basis | None = None, max_iter: int | None = None) -> LPResult:
        lo = np.concatenate([np.asarray(lb, dtype=float), self.slack_lo])
        hi = np.concatenate([np.asarray(ub, dtype=float), self.slack_hi])
        if np.any(lo > hi + FEAS_TOL):
            return LPResult(INFEASIBLE, None, math.inf, None, 0)
        if max_iter is None:
            max_iter = 50 * (self.m + self.n) + 10000
        run = _Run(self, lo, hi, max_iter)
        if warm is not None:
            try:
                res = run.warm(warm)
                if res is not None:
                    return res
            except _Singular:
                pass
            run = _Run(self, lo, hi, max_iter)
        return run.cold()


class _Run:
    def __init__(self, lp: SimplexLP, lo: np.ndarray, hi: np.ndarray, max_iter: int):
        self.lp = lp
        self.lo = lo
        self.hi = hi
        self.m = lp.m
        self.nt = lp.n + lp.m
        self.max_iter = max_iter
        self.iters = 0
        self.head = np.zeros(self.m, dtype=np.int64)
        self.status = np.zeros(self.nt, dtype=np.int8)
        self.x = np.zeros(self.nt)
        self.lu = None
        self.etas: list[tuple[int, np.ndarray]] = []
        self.degenerate = 0
        self.bland = False

    # -- factorisation --

    def factor(self):
        B = self.lp.AI[:, self.head]
        try:
            self.lu = splu(B, permc_spec="COLAMD") if self.m else None
        except RuntimeError as exc:  # exactly singular
            raise _Singular(str(exc)) from exc
        self.etas = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        w = self.lu.solve(a) if self.m else a.copy()
        for r, col in self.etas:
            wr = w[r] / col[r]
            w -= col * wr
            w[r] = wr
        return w

    def btran(self, e: np.ndarray) -> np.ndarray:
        v = e.copy()
        for r, col in reversed(self.etas):
            v[r] = (v[r] - (col @ v - col[r] * v[r])) / col[r]
        return self.lu.solve(v, trans="T") if self.m else v

    def pivot(self, r: int, q: int, alpha: np.ndarray):
        self.head[r] = q
        self.etas.append((r, alpha))
        if len(self.etas) >= REFACTOR_EVERY:
            self.factor()
            self.recompute_basics()

    # -- values --

    def nonbasic_values(self):
        st = self.status
        x = self.x
        x[st == AT_LOWER] = self.lo[st == AT_LOWER]
        x[st == AT_UPPER] = self.hi[st == AT_UPPER]

    def recompute_basics(self):
        lp = self.lp
        xn = self.x.copy()
        xn[self.head] = 0.0
        rhs = lp.b - lp.A @ xn[: lp.n] - xn[lp.n:]
        self.x[self.head] = self.ftran(rhs)

    def reduced_costs(self) -> tuple[np.ndarray, np.ndarray]:
        y = self.btran(self.lp.c[self.head])
        d = self.lp.c - self.lp.row_products(y)
        d[self.head] = 0.0
        return d, y

    def objective(self) -> float:
        return float(self.lp.c @ self.x)

    def result(self, status: str) -> LPResult:
        if status != OPTIMAL:
            return LPResult(status, None, math.inf if status == INFEASIBLE else -math.inf,
                            Basis(self.head.copy(), self.status.copy()), self.iters)
        self.recompute_basics()
        _, y = self.reduced_costs()
        x = self.x[: self.lp.n].copy()
        return LPResult(OPTIMAL, x, float(self.lp.c[: self.lp.n] @ x),
                        Basis(self.head.copy(), self.status.copy(), self.lu, tuple(self.etas)),
                        self.iters, duals=y)

    # -- starts --

    def cold(self) -> LPResult:
        lp = self.lp
        lo, hi = self.lo, self.hi
        self.head[:] = np.arange(lp.n, self.nt)
        self.status[:] = AT_LOWER
        self.status[self.head] = BASIC
        art = []
        real_lo, real_hi = lo.copy(), hi.copy()
        for j in range(lp.n):
            cj = lp.c[j]
            if lo[j] == hi[j]:
                self.status[j] = AT_LOWER
            elif cj > 0 or (cj == 0 and math.isfinite(lo[j])):
                if not math.isfinite(lo[j]):
                    lo[j] = -ART_BOUND if not math.isfinite(hi[j]) else hi[j] - 2 * ART_BOUND
                    art.append(j)
                self.status[j] = AT_LOWER
            else:
                if not math.isfinite(hi[j]):
                    if cj == 0:
                        self.status[j] = FREE
                        self.x[j] = 0.0
                        continue
                    hi[j] = ART_BOUND if not math.isfinite(lo[j]) else lo[j] + 2 * ART_BOUND
                    art.append(j)
                self.status[j] = AT_UPPER
        self.factor()
        self.nonbasic_values()
        self.recompute_basics()
        st = self.dual_simplex()
        if st != OPTIMAL:
            return self.result(st)
        if art:
            self.lo[:] = real_lo
            self.hi[:] = real_hi
            for j in art:
                if self.status[j] != BASIC:
                    self.status[j] = FREE
        st = self.primal_simplex()
        return self.result(st)

    def warm(self, basis: Basis) -> LPResult | None:
        self.head[:] = basis.head
        self.status[:] = basis.status
        st = self.status
        # nonbasic statuses must point at finite bounds
        bad_lo = (st == AT_LOWER) & ~np.isfinite(self.lo)
        bad_hi = (st == AT_UPPER) & ~np.isfinite(self.hi)
        st[bad_lo & np.isfinite(self.hi)] = AT_UPPER
        st[bad_hi & np.isfinite(self.lo)] = AT_LOWER
        if np.any((st == AT_LOWER) & ~np.isfinite(self.lo)) or np.any((st == AT_UPPER) & ~np.isfinite(self.hi)):
            return None
        self.x[st == FREE] = 0.0
        if basis.lu is not None:
            self.lu, self.etas = basis.lu, list(basis.etas)
        else:
            self.factor()
        self.nonbasic_values()
        self.recompute_basics()
        d, _ = self.reduced_costs()
        if self.dual_infeasibility(d) <= DUAL_TOL:
            st_ = self.dual_simplex()
            if st_ == OPTIMAL:
                st_ = self.primal_simplex()
            return self.result(st_)
        if self.primal_infeasibility() <= FEAS_TOL:
            return self.result(self.primal_simplex())
        return None

    def dual_infeasibility(self, d: np.ndarray) -> float:
        st = self.status
        fixed = self.lo == self.hi
        worst = 0.0
        m1 = (st == AT_LOWER) & ~fixed
        m2 = (st == AT_UPPER) & ~fixed
        m3 = (st == FREE)
        if m1.any():
            worst = max(worst, float(np.max(-d[m1])))
        if m2.any():
            worst = max(worst, float(np.max(d[m2])))
        if m3.any():
            worst = max(worst, float(np.max(np.abs(d[m3]))))
        return worst

    def primal_infeasibility(self) -> float:
        xb = self.x[self.head]
        viol = np.maximum(self.lo[self.head] - xb, xb - self.hi[self.head])
        return float(viol.max(initial=0.0))

    # -- dual simplex --

    def dual_simplex(self) -> str:
        lp = self.lp
        lo, hi = self.lo, self.hi
        d = None
        while True:
            if self.iters >= self.max_iter:
                return ITERATION_LIMIT
            if d is None or not self.etas:
                d, _ = self.reduced_costs()  # fresh after every refactorisation
            xb = self.x[self.head]
            below = lo[self.head] - xb
            above = xb - hi[self.head]
            viol = np.maximum(below, above)
            if self.bland:
                cand = np.nonzero(viol > FEAS_TOL)[0]
                if cand.size == 0:
                    return OPTIMAL
                r = int(cand[np.argmin(self.head[cand])])
            else:
                r = int(np.argmax(viol)) if self.m else 0
                if not self.m or viol[r] <= FEAS_TOL:
                    return OPTIMAL
            increase = below[r] > 0
            leaving = int(self.head[r])
            target = lo[leaving] if increase else hi[leaving]
            e = np.zeros(self.m)
            e[r] = 1.0
            rho = self.btran(e)
            alpha_row = lp.row_products(rho)
            st = self.status
            movable = (st != BASIC) & (lo != hi)
            if increase:
                elig = movable & (((st == AT_LOWER) & (alpha_row < -PIVOT_TOL))
                                  | ((st == AT_UPPER) & (alpha_row > PIVOT_TOL))
                                  | ((st == FREE) & (np.abs(alpha_row) > PIVOT_TOL)))
            else:
                elig = movable & (((st == AT_LOWER) & (alpha_row > PIVOT_TOL))
                                  | ((st == AT_UPPER) & (alpha_row < -PIVOT_TOL))
                                  | ((st == FREE) & (np.abs(alpha_row) > PIVOT_TOL)))
            idx = np.nonzero(elig)[0]
            if idx.size == 0:
                return INFEASIBLE
            ratios = np.abs(d[idx]) / np.abs(alpha_row[idx])
            best = ratios.min()
            if self.bland:
                q = int(idx[np.nonzero(ratios <= best + 1e-12)[0][0]])
            else:
                # among near-ties prefer the largest pivot
                near = np.nonzero(ratios <= best + 1e-9 * max(1.0, best))[0]
                q = int(idx[near[np.argmax(np.abs(alpha_row[idx[near]]))]])
            alpha = self.ftran(lp.column(q))
            if abs(alpha[r]) < PIVOT_TOL:
                self.factor()
                self.recompute_basics()
                d = None
                self.iters += 1
                continue
            theta = d[q] / alpha_row[q]
            d -= theta * alpha_row
            d[q] = 0.0
            dq = (self.x[leaving] - target) / alpha[r]
            self.x[self.head] -= alpha * dq
            self.x[q] += dq
            self.x[leaving] = target
            self.status[leaving] = AT_LOWER if increase else AT_UPPER
            self.status[q] = BASIC
            self.pivot(r, q, alpha)
            d[self.head] = 0.0
            self.iters += 1
            if best <= 1e-12:
                self.degenerate += 1
                if self.degenerate >= DEGENERATE_LIMIT:
                    self.bland = True
            else:
                self.degenerate = 0

    # -- primal simplex --

    def primal_simplex(self) -> str:
        lp = self.lp
        lo, hi = self.lo, self.hi
        while True:
            if self.iters >= self.max_iter:
                return ITERATION_LIMIT
            d, _ = self.reduced_costs()
            st = self.status
            movable = (st != BASIC) & (lo != hi)
            up = movable & (((st == AT_LOWER) | (st == FREE)) & (d < -DUAL_TOL))
            down = movable & (((st == AT_UPPER) | (st == FREE)) & (d > DUAL_TOL))
            cand = np.nonzero(up | down)[0]
            if cand.size == 0:
                return OPTIMAL
            if self.bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0
            alpha = self.ftran(lp.column(q))
            rate = -alpha * direction  # change of basic values per unit step
            xb = self.x[self.head]
            lb_b, ub_b = lo[self.head], hi[self.head]
            step = math.inf
            r = -1
            dec = rate < -PIVOT_TOL
            inc = rate > PIVOT_TOL
            lim = np.full(self.m, math.inf)
            with np.errstate(invalid="ignore"):
                lim[dec] = np.maximum(xb[dec] - lb_b[dec], 0.0) / -rate[dec]
                lim[inc] = np.maximum(ub_b[inc] - xb[inc], 0.0) / rate[inc]
            if self.m:
                best = lim.min()
                if math.isfinite(best):
                    ties = np.nonzero(lim <= best + 1e-12)[0]
                    if self.bland:
                        r = int(ties[np.argmin(self.head[ties])])
                    else:
                        r = int(ties[np.argmax(np.abs(rate[ties]))])
                    step = float(lim[r])
            own = hi[q] - lo[q] if st[q] != FREE else (
                hi[q] - self.x[q] if direction > 0 else self.x[q] - lo[q])
            if own < step:
                if not math.isfinite(own):
                    return UNBOUNDED
                # bound flip, no basis change
                self.x[self.head] += rate * own
                self.x[q] += direction * own
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = hi[q] if direction > 0 else lo[q]
                self.iters += 1
                self.degenerate = 0
                continue
            if r < 0:
                return UNBOUNDED
            leaving = int(self.head[r])
            self.x[self.head] += rate * step
            self.x[q] += direction * step
            self.status[leaving] = AT_LOWER if rate[r] < 0 else AT_UPPER
            self.x[leaving] = lo[leaving] if rate[r] < 0 else hi[leaving]
            self.status[q] = BASIC
            self.pivot(r, q, alpha)
            self.iters += 1
            if step <= 1e-12:
                self.degenerate += 1
                if self.degenerate >= DEGENERATE_LIMIT:
                    self.bland = True
            else:
                self.degenerate = 0


def solve_lp(A, senses, rhs, c, lb, ub) -> LPResult:
    return SimplexLP(A, senses, rhs, c).solve(lb, ub)
