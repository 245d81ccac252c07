from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

CONTINUOUS = "continuous"
BINARY = "binary"

LE, EQ, GE = "<=", "==", ">="
_SENSES = {"<=": LE, "=<": LE, "==": EQ, "=": EQ, ">=": GE, "=>": GE}

MIN, MAX = "min", "max"


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT_REACHED = "limit-reached"


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    lower: float
    upper: float
    kind: str


@dataclass(frozen=True)
class Constraint:
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    name: str


@dataclass
class MilpModel:
    """Linear objective, linear constraints, continuous and binary variables."""

    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective_sense: str = MIN
    objective: dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    name: str = "model"
    # optional heuristic hint: binaries with lower values are fixed first when diving
    priorities: dict[int, int] = field(default_factory=dict)

    def add_variable(self, lower: float = 0.0, upper: float = math.inf, kind: str = CONTINUOUS,
                     name: str | None = None) -> int:
        if kind not in (CONTINUOUS, BINARY):
            raise ValueError(f"unknown variable kind {kind!r}")
        lower, upper = float(lower), float(upper)
        if kind == BINARY:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        if lower > upper:
            raise ValueError(f"variable {name!r}: lower bound {lower} exceeds upper bound {upper}")
        vid = len(self.variables)
        self.variables.append(Variable(vid, name or f"x{vid}", lower, upper, kind))
        return vid

    def add_binary(self, name: str | None = None) -> int:
        return self.add_variable(0.0, 1.0, BINARY, name)

    def _check_terms(self, terms: Iterable[tuple[int, float]]) -> tuple[tuple[int, float], ...]:
        merged: dict[int, float] = {}
        for var, coeff in terms:
            if not (isinstance(var, (int, np.integer)) and 0 <= var < len(self.variables)):
                raise KeyError(f"unknown variable id {var!r}")
            merged[int(var)] = merged.get(int(var), 0.0) + float(coeff)
        return tuple((v, c) for v, c in merged.items() if c != 0.0)

    def add_constraint(self, terms: Iterable[tuple[int, float]], sense: str, rhs: float,
                       name: str | None = None) -> int:
        if sense not in _SENSES:
            raise ValueError(f"unknown constraint sense {sense!r}")
        cid = len(self.constraints)
        self.constraints.append(Constraint(self._check_terms(terms), _SENSES[sense], float(rhs),
                                           name or f"c{cid}"))
        return cid

    def set_objective(self, terms: Iterable[tuple[int, float]], sense: str = MIN, constant: float = 0.0):
        if sense not in (MIN, MAX):
            raise ValueError(f"objective sense must be 'min' or 'max', got {sense!r}")
        self.objective = dict(self._check_terms(terms))
        self.objective_sense = sense
        self.objective_constant = float(constant)

    def set_priority(self, var: int, priority: int):
        if not 0 <= var < len(self.variables):
            raise KeyError(f"unknown variable id {var!r}")
        self.priorities[int(var)] = int(priority)

    def set_bounds(self, var: int, lower: float | None = None, upper: float | None = None):
        v = self.variables[var]
        lo = v.lower if lower is None else float(lower)
        hi = v.upper if upper is None else float(upper)
        if lo > hi:
            raise ValueError(f"variable {v.name!r}: lower bound {lo} exceeds upper bound {hi}")
        self.variables[var] = Variable(v.id, v.name, lo, hi, v.kind)

    # -- array views used by the solvers --

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def binaries(self) -> list[int]:
        return [v.id for v in self.variables if v.kind == BINARY]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lower for v in self.variables], dtype=float)
        ub = np.array([v.upper for v in self.variables], dtype=float)
        return lb, ub

    def matrix(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for i, c in enumerate(self.constraints):
            for v, a in c.terms:
                rows.append(i)
                cols.append(v)
                vals.append(a)
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), len(self.variables)))

    def rhs(self) -> np.ndarray:
        return np.array([c.rhs for c in self.constraints], dtype=float)

    def senses(self) -> list[str]:
        return [c.sense for c in self.constraints]

    def cost(self) -> np.ndarray:
        """Objective coefficients as a minimisation."""
        c = np.zeros(len(self.variables))
        for v, a in self.objective.items():
            c[v] = a
        return -c if self.objective_sense == MAX else c

    def objective_value(self, values: Sequence[float]) -> float:
        return self.objective_constant + sum(a * values[v] for v, a in self.objective.items())

    def max_violation(self, values: Sequence[float]) -> float:
        """Largest violation of any constraint or bound by ``values``."""
        x = np.asarray(values, dtype=float)
        worst = 0.0
        lb, ub = self.bounds()
        if len(x):
            worst = max(worst, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        for c in self.constraints:
            act = sum(a * x[v] for v, a in c.terms)
            if c.sense == LE:
                worst = max(worst, act - c.rhs)
            elif c.sense == GE:
                worst = max(worst, c.rhs - act)
            else:
                worst = max(worst, abs(act - c.rhs))
        return worst


@dataclass(frozen=True)
class SolveConfig:
    time_limit: float = math.inf
    gap: float = 1e-6  # absolute gap on the objective
    rel_gap: float = 0.0
    big_m_check: bool = False
    node_limit: int | None = None
    lp_engine: str = "simplex"  # "simplex" (built in) or "highs" (scipy)
    int_tol: float = 1e-6
    feas_tol: float = 1e-7
    dive_lps: int = 3000  # LP budget of the root diving heuristic, 0 disables


@dataclass
class Solution:
    status: Status
    values: dict[int, float] = field(default_factory=dict)
    objective_value: float = math.nan
    best_bound: float = math.nan
    node_count: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    incumbent_trace: list[float] = field(default_factory=list)
    message: str = ""

    @property
    def has_values(self) -> bool:
        return bool(self.values)

    def value(self, var: int) -> float:
        return self.values[var]
