"""Independent references for the MILP tests: binary enumeration and vertex enumeration."""
import itertools
import math

import numpy as np
from scipy.optimize import linprog

from autotamp.milp import MilpModel


def random_milp(rng: np.random.Generator, max_bin: int = 8, max_cont: int = 6) -> MilpModel:
    nb = int(rng.integers(1, max_bin + 1))
    nc = int(rng.integers(0, max_cont + 1))
    m = int(rng.integers(1, 10))
    model = MilpModel()
    for _ in range(nb):
        model.add_binary()
    for _ in range(nc):
        model.add_variable(-5, 5)
    n = nb + nc
    A = np.round(rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.6), 2)
    b = np.round(rng.uniform(-1, 3, size=m), 2)
    senses = rng.choice(["<=", ">=", "=="], size=m, p=[0.6, 0.3, 0.1])
    for i in range(m):
        rhs = b[i] if senses[i] != ">=" else -b[i]
        if senses[i] == "==":
            rhs = 0.0  # x = 0 on the continuous part keeps equality rows satisfiable often
        model.add_constraint([(j, A[i, j]) for j in range(n)], str(senses[i]), rhs)
    c = np.round(rng.normal(size=n), 2)
    model.set_objective([(j, c[j]) for j in range(n)], rng.choice(["max", "min"]))
    return model


def enumerate_optimum(model: MilpModel) -> float:
    """Best objective over every binary assignment, each an LP; -inf/inf (by sense) when infeasible."""
    A = model.matrix().toarray()
    b = model.rhs()
    senses = model.senses()
    cost = model.cost()
    lb, ub = model.bounds()
    bins = model.binaries
    a_ub = [A[i] if s == "<=" else -A[i] for i, s in enumerate(senses) if s != "=="]
    b_ub = [b[i] if s == "<=" else -b[i] for i, s in enumerate(senses) if s != "=="]
    a_eq = [A[i] for i, s in enumerate(senses) if s == "=="]
    b_eq = [b[i] for i, s in enumerate(senses) if s == "=="]
    best = math.inf
    for bits in itertools.product((0.0, 1.0), repeat=len(bins)):
        lo, hi = lb.copy(), ub.copy()
        lo[bins] = bits
        hi[bins] = bits
        r = linprog(cost, A_ub=np.array(a_ub) if a_ub else None, b_ub=b_ub or None,
                    A_eq=np.array(a_eq) if a_eq else None, b_eq=b_eq or None,
                    bounds=list(zip(lo, hi)), method="highs")
        if r.status == 0:
            best = min(best, r.fun)
    if math.isinf(best):
        return best
    value = best + 0.0
    return (-value if model.objective_sense == "max" else value) + model.objective_constant


def vertex_optimum(A, b, c, lb, ub):
    """min c x s.t. A x <= b, lb <= x <= ub (all finite) by trying every vertex."""
    n = A.shape[1]
    rows = [(A[i], b[i]) for i in range(A.shape[0])]
    rows += [(-np.eye(n)[j], -lb[j]) for j in range(n)] + [(np.eye(n)[j], ub[j]) for j in range(n)]
    G = np.array([r for r, _ in rows])
    h = np.array([v for _, v in rows])
    best = math.inf
    for idx in itertools.combinations(range(len(rows)), n):
        M = G[list(idx)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(idx)])
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    return best
