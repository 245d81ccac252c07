"""Batch runs of a method over scenario cases, monitor re-verification, and summary tables."""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import monitor, stl
from .geometry import Trajectory, environment_from_dict
from .llm import LlmClient
from .orchestrator import METHODS, run_method
from .scenarios import ScenarioCase, case_from_dict
from .svg import render_svg

DEFAULT_TIMEOUT = 90 * 60.0
TIMING_ROWS = ("total", "client", "planner")
PERCENTILES = (10, 50, 90)


@dataclass(frozen=True)
class Report:
    records: tuple[dict, ...]
    summary: Mapping[str, object] = field(default_factory=dict)

    def to_jsonl(self) -> str:
        return to_jsonl(self.records)


def run_case(case: ScenarioCase, method: str, client: LlmClient, timeout: float = DEFAULT_TIMEOUT,
             timings: bool = True, **plan_kw) -> dict:
    """One case as a report record. Crashes and timeouts become failed records."""
    t0 = time.perf_counter()
    cfg = case.plan_config(**plan_kw)
    record = {"case_id": case.case_id, "scenario": case.scenario, "method": method, "case": case.to_dict()}
    try:
        out = run_method(method, case.instruction, case.environment, client, cfg,
                         checker=case.ground_truth_stl, deadline=t0 + timeout)
        body = out.to_dict(timings=timings)
    except Exception as exc:  # failures are data, the suite keeps going
        body = {"method": method, "final_stl": None, "trajectory": None, "success": False,
                "iterations": {"syntactic": 0, "semantic": 0, "replans": 0}, "syntactic_attempts": [],
                "message": f"{type(exc).__name__}: {exc}", "timings": {}, "transcript": []}
    if timings and not body["timings"]:
        body["timings"] = {"total": time.perf_counter() - t0, "client": 0.0, "planner": 0.0}
    elapsed = time.perf_counter() - t0
    if elapsed > timeout:
        body["success"] = False
        body["message"] = f"timed out after {elapsed:.1f} s (limit {timeout:g} s)"
    record.update(body)
    record["reported_success"] = bool(body["success"])
    record["success"] = verify_record(record)
    return record


def run_suite(cases: Sequence[ScenarioCase], method: str, client: LlmClient, parallelism: int = 1,
              timeout: float = DEFAULT_TIMEOUT, timings: bool = True, **plan_kw) -> Report:
    """Records come back in case order whatever the parallelism."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def one(case):
        return run_case(case, method, client, timeout, timings, **plan_kw)

    if parallelism == 1:
        records = [one(c) for c in cases]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(one, cases))
    return Report(tuple(records), summarize(records))


def verify_record(record: Mapping) -> bool:
    """Monitor verdict recomputed from the stored case and trajectory alone."""
    traj = record.get("trajectory")
    if not traj:
        return False
    case = record["case"]
    env = environment_from_dict(case["environment"])
    f = stl.parse_preorder(case["stl"])
    try:
        return monitor.satisfied(f, Trajectory.from_dict(traj), env)
    except ValueError:
        return False


def percentile(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile: the smallest value with at least q% of the data at or below it."""
    if not values:
        return math.nan
    xs = sorted(values)
    rank = max(1, math.ceil(q / 100.0 * len(xs)))
    return xs[rank - 1]


def timing_table(records: Iterable[Mapping]) -> dict[str, dict[int, float]]:
    rows: dict[str, list[float]] = {k: [] for k in TIMING_ROWS}
    for r in records:
        for k in TIMING_ROWS:
            if k in (r.get("timings") or {}):
                rows[k].append(float(r["timings"][k]))
    return {k: {p: percentile(v, p) for p in PERCENTILES} for k, v in rows.items()}


def summarize(records: Iterable[Mapping]) -> dict:
    records = list(records)
    n = len(records)
    ok = sum(1 for r in records if r["success"])
    by = {}
    for key in sorted({(r["scenario"], r["method"]) for r in records}):
        sub = [r for r in records if (r["scenario"], r["method"]) == key]
        by[f"{key[0]}/{key[1]}"] = {"cases": len(sub), "successes": sum(1 for r in sub if r["success"])}
    iters = {k: sum(r["iterations"].get(k, 0) for r in records) for k in ("syntactic", "semantic", "replans")}
    return {"cases": n, "successes": ok, "success_rate": ok / n if n else math.nan, "groups": by,
            "iterations": iters, "timings": timing_table(records)}


def to_jsonl(records: Iterable[Mapping]) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)


def read_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def format_table(records: Sequence[Mapping], reverify: bool = True) -> str:
    """Success rates per scenario and method, then the timing percentiles."""
    records = [dict(r, success=verify_record(r)) if reverify else dict(r) for r in records]
    s = summarize(records)
    lines = [f"{'scenario/method':<28}{'cases':>6}{'success':>9}{'rate':>8}"]
    for name, g in s["groups"].items():
        lines.append(f"{name:<28}{g['cases']:>6}{g['successes']:>9}{g['successes'] / g['cases']:>8.1%}")
    rate = s["success_rate"]
    lines.append(f"{'all':<28}{s['cases']:>6}{s['successes']:>9}" + (f"{rate:>8.1%}" if s["cases"] else f"{'-':>8}"))
    lines.append("")
    lines.append(f"{'time (s)':<12}" + "".join(f"{'p' + str(p):>10}" for p in PERCENTILES))
    for row, vals in s["timings"].items():
        lines.append(f"{row:<12}" + "".join(f"{vals[p]:>10.3f}" if not math.isnan(vals[p]) else f"{'-':>10}"
                                             for p in PERCENTILES))
    return "\n".join(lines)


def load_cases_file(text: str) -> list[ScenarioCase]:
    """A case JSON object or a list of them."""
    data = json.loads(text)
    return [case_from_dict(d) for d in (data if isinstance(data, list) else [data])]


__all__ = [
    "Report", "run_case", "run_suite", "verify_record", "percentile", "timing_table", "summarize",
    "to_jsonl", "read_jsonl", "format_table", "load_cases_file", "render_svg", "DEFAULT_TIMEOUT",
]
