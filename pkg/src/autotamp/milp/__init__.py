"""Mixed-integer linear programs and a small exact solver for them."""
from . import adapters, lpformat
from .bnb import big_m_report, solve, tighten_bounds
from .model import (BINARY, CONTINUOUS, EQ, GE, LE, MAX, MIN, Constraint, MilpModel, Solution,
                    SolveConfig, Status, Variable)

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "LE", "MAX", "MIN", "Constraint", "MilpModel", "Solution",
    "SolveConfig", "Status", "Variable", "big_m_report", "solve", "tighten_bounds",
]
