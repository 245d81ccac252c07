"""Solver interface plus adapters for external MILP solvers."""
from __future__ import annotations

import math
import os
import subprocess
import tempfile
import time
from typing import Protocol, Sequence

from . import bnb
from .lpformat import _safe_names, export_lp_text
from .model import MilpModel, Solution, SolveConfig, Status


class MilpSolver(Protocol):
    def solve(self, model: MilpModel, config: SolveConfig) -> Solution: ...


class BuiltinSolver:
    """The in-package branch and bound."""

    def solve(self, model: MilpModel, config: SolveConfig = SolveConfig()) -> Solution:
        return bnb.solve(model, config)


def _values_by_name(model: MilpModel, named: dict[str, float]) -> dict[int, float]:
    names = _safe_names(model)
    return {v.id: float(named.get(nm, 0.0)) for v, nm in zip(model.variables, names)}


class HighsAdapter:
    """Solves through the ``highspy`` bindings, reading the exported LP text."""

    def solve(self, model: MilpModel, config: SolveConfig = SolveConfig()) -> Solution:
        import highspy

        t0 = time.perf_counter()
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "model.lp")
            with open(path, "w") as fh:
                fh.write(export_lp_text(model))
            h = highspy.Highs()
            h.setOptionValue("output_flag", False)
            h.readModel(path)
        if math.isfinite(config.time_limit):
            h.setOptionValue("time_limit", float(config.time_limit))
        h.setOptionValue("mip_abs_gap", float(config.gap))
        h.setOptionValue("mip_rel_gap", float(config.rel_gap))
        h.run()
        st = h.getModelStatus()
        S = highspy.HighsModelStatus
        info = h.getInfo()
        status = {
            S.kOptimal: Status.OPTIMAL,
            S.kInfeasible: Status.INFEASIBLE,
            S.kUnbounded: Status.UNBOUNDED,
            S.kUnboundedOrInfeasible: Status.UNBOUNDED,
        }.get(st, Status.LIMIT_REACHED)
        values: dict[int, float] = {}
        obj = math.nan
        if status in (Status.OPTIMAL, Status.LIMIT_REACHED) and h.getSolution().value_valid:
            cols = h.getLp().col_names_
            values = _values_by_name(model, dict(zip(cols, h.getSolution().col_value)))
            obj = model.objective_value(values)
        return Solution(status, values, obj, math.nan, int(getattr(info, "mip_node_count", 0)),
                        int(getattr(info, "simplex_iteration_count", 0)), time.perf_counter() - t0,
                        message=h.modelStatusToString(st))


def parse_solution_file(text: str) -> tuple[str, float, dict[str, float]]:
    """Read a HiGHS-style raw solution file: model status, objective, column values."""
    lines = [ln.strip() for ln in text.splitlines()]
    status, obj, values = "", math.nan, {}
    i = 0
    while i < len(lines):
        ln = lines[i]
        if ln.lower() == "model status" and i + 1 < len(lines):
            status = lines[i + 1]
            i += 2
            continue
        if ln.lower().startswith("objective"):
            parts = ln.split()
            try:
                obj = float(parts[-1])
            except ValueError:
                pass
        if ln.startswith("# Columns"):
            count = int(ln.split()[-1])
            for row in lines[i + 1:i + 1 + count]:
                name, val = row.split()[:2]
                values[name] = float(val)
            i += 1 + count
            break
        i += 1
    return status, obj, values


class SubprocessLpSolver:
    """Runs an external solver binary on an LP file.

    ``command`` is an argv template; ``{lp}`` and ``{sol}`` are replaced by the
    model and solution file paths. The default matches the HiGHS command line.
    """

    def __init__(self, command: Sequence[str] = ("highs", "--model_file", "{lp}", "--solution_file", "{sol}"),
                 timeout: float | None = None):
        self.command = list(command)
        self.timeout = timeout

    def solve(self, model: MilpModel, config: SolveConfig = SolveConfig()) -> Solution:
        t0 = time.perf_counter()
        with tempfile.TemporaryDirectory() as tmp:
            lp = os.path.join(tmp, "model.lp")
            sol = os.path.join(tmp, "model.sol")
            with open(lp, "w") as fh:
                fh.write(export_lp_text(model))
            argv = [a.replace("{lp}", lp).replace("{sol}", sol) for a in self.command]
            timeout = self.timeout
            if timeout is None and math.isfinite(config.time_limit):
                timeout = config.time_limit + 30
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
            if proc.returncode != 0 or not os.path.exists(sol):
                return Solution(Status.LIMIT_REACHED, wall_time=time.perf_counter() - t0,
                                message=f"solver exited with {proc.returncode}: {proc.stderr.strip()[:200]}")
            with open(sol) as fh:
                status_txt, obj, named = parse_solution_file(fh.read())
        low = status_txt.lower()
        if low == "optimal":
            status = Status.OPTIMAL
        elif "infeasible" in low and "unbounded" not in low:
            status = Status.INFEASIBLE
        elif "unbounded" in low:
            status = Status.UNBOUNDED
        else:
            status = Status.LIMIT_REACHED
        values = _values_by_name(model, named) if named else {}
        if values:
            obj = model.objective_value(values)
        return Solution(status, values, obj, wall_time=time.perf_counter() - t0, message=status_txt)


def get_solver(name: str) -> MilpSolver:
    if name in ("builtin", "bnb"):
        return BuiltinSolver()
    if name == "highs":
        return HighsAdapter()
    raise ValueError(f"unknown solver {name!r}")


__all__ = ["MilpSolver", "BuiltinSolver", "HighsAdapter", "SubprocessLpSolver", "get_solver",
           "parse_solution_file"]
