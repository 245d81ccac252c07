"""Command line: run suites, print tables, plan single cases, render SVGs, solve LP files."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import harness, milp, scenarios, stl
from .diagnostics import DiagnosticError
from .geometry import Trajectory, load_environment
from .llm import get_client
from .orchestrator import METHODS
from .planner import PlanConfig, plan
from .svg import render_svg


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")


def _write(path: str | None, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _seeds(text: str | None) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()] if text else []


def select_cases(args) -> list[scenarios.ScenarioCase]:
    cases: list[scenarios.ScenarioCase] = []
    for path in args.case or []:
        cases += harness.load_cases_file(_read(path))
    names = args.scenario or []
    if "all" in names:
        names = list(scenarios.SCENARIOS)
    for name in names:
        pool = scenarios.builtin_cases([name])
        if getattr(args, "example_only", False):
            pool = pool[:1]
        cases += pool
    if getattr(args, "case_id", None):
        cases = [c for c in cases if c.case_id in args.case_id]
    seeds = _seeds(getattr(args, "seeds", None))
    if seeds:
        cases = [scenarios.randomize(c, s) for c in cases for s in seeds]
    if not cases:
        raise SystemExit("no cases selected; use --scenario NAME or --case FILE")
    return cases


def cmd_run(args) -> int:
    cases = select_cases(args)
    client = get_client(args.client)
    kw = {"time_limit": args.plan_time_limit} if args.plan_time_limit else {}
    report = harness.run_suite(cases, args.method, client, parallelism=args.parallel, timeout=args.timeout,
                               timings=not args.no_timings, **kw)
    _write(args.out, report.to_jsonl())
    s = report.summary
    print(f"{s['successes']}/{s['cases']} cases succeeded", file=sys.stderr)
    return 0


def cmd_table(args) -> int:
    print(harness.format_table(harness.read_jsonl(_read(args.input))))
    return 0


def cmd_render(args) -> int:
    case = harness.load_cases_file(_read(args.case))[0]
    traj = Trajectory.from_json(_read(args.traj)) if args.traj else None
    _write(args.out, render_svg(traj, case.environment))
    return 0


def cmd_cases(args) -> int:
    cases = select_cases(args)
    _write(args.out, json.dumps([c.to_dict() for c in cases], indent=1) + "\n")
    return 0


def _plan_jobs(args):
    """(label, formula, environment, config) for --env/--stl or for selected cases."""
    kw = {"time_limit": args.time_limit} if args.time_limit else {}
    if args.env:
        if not args.stl:
            raise SystemExit("--env needs --stl")
        env = load_environment(_read(args.env))
        horizon = args.horizon or (env.time_limit if math.isfinite(env.time_limit) else None)
        if horizon is None:
            raise SystemExit("the environment has no time limit; pass --horizon")
        cfg = PlanConfig.for_environment(env, steps=args.steps, horizon=horizon,
                                         collision=len(env.agents) > 1, **kw)
        return [(env.name or "plan", stl.parse_preorder(args.stl), env, cfg)]
    cases = select_cases(args)
    formula = stl.parse_preorder(args.stl) if args.stl else None
    return [(c.case_id, formula or c.ground_truth_stl, c.environment, c.plan_config(**kw)) for c in cases]


def cmd_plan(args) -> int:
    rc = 0
    out = []
    for label, f, env, cfg in _plan_jobs(args):
        res = plan(f, env, cfg)
        print(f"{label}: {res.status} robustness={res.robustness:.4g} time={res.solve_time:.2f}s "
              f"binaries={res.num_binaries}", file=sys.stderr)
        for d in res.diagnostics:
            print(f"  {d}", file=sys.stderr)
        if not res.feasible:
            rc = 1
        out.append({"case_id": label, "status": res.status,
                    "trajectory": res.trajectory.to_dict() if res.trajectory else None})
        if args.svg and len(out) == 1:
            _write(args.svg, render_svg(res.trajectory, env))
    if args.out:
        body = out[0]["trajectory"] if len(out) == 1 else out
        _write(args.out, json.dumps(body) + "\n")
    return rc


def cmd_milp(args) -> int:
    model = milp.lpformat.read_lp_text(_read(args.file))
    solver = milp.adapters.get_solver(args.solver)
    sol = solver.solve(model, milp.SolveConfig(time_limit=args.time_limit))
    print(f"status: {sol.status.value}")
    print(f"objective: {sol.objective_value:.10g}")
    print(f"nodes: {sol.node_count}  time: {sol.wall_time:.3f}s")
    if args.values:
        for v in model.variables:
            if v.id in sol.values:
                print(f"{v.name} = {sol.values[v.id]:.10g}")
    return 0 if sol.values else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autotamp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def add_selection(q, seeds=True):
        q.add_argument("--scenario", action="append", help=f"one of {', '.join(scenarios.SCENARIOS)} or all")
        q.add_argument("--case", action="append", help="case JSON file (object or list)")
        q.add_argument("--case-id", action="append", help="keep only these case ids")
        q.add_argument("--example-only", action="store_true", help="first case of each scenario only")
        if seeds:
            q.add_argument("--seeds", help="comma separated seeds for randomized starts")

    q = sub.add_parser("run", help="run a method over cases and write a JSONL report")
    add_selection(q)
    q.add_argument("--method", choices=METHODS, default="autotamp")
    q.add_argument("--client", required=True, help="scripted:FILE.json or https:MODEL")
    q.add_argument("--out", default="-")
    q.add_argument("--timeout", type=float, default=harness.DEFAULT_TIMEOUT, help="seconds per case")
    q.add_argument("--parallel", type=int, default=1)
    q.add_argument("--plan-time-limit", type=float, default=None, help="solver seconds per plan")
    q.add_argument("--no-timings", action="store_true", help="omit timings (byte-reproducible reports)")
    q.set_defaults(func=cmd_run)

    q = sub.add_parser("table", help="success rates and timing percentiles of a report")
    q.add_argument("--in", dest="input", required=True)
    q.set_defaults(func=cmd_table)

    q = sub.add_parser("render", help="draw a case map and trajectory as SVG")
    q.add_argument("--case", required=True)
    q.add_argument("--traj")
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_render)

    q = sub.add_parser("cases", help="export cases as JSON")
    add_selection(q)
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_cases)

    q = sub.add_parser("plan", help="plan an STL formula (or the ground truth of cases)")
    add_selection(q)
    q.add_argument("--env", help="environment JSON file")
    q.add_argument("--stl", help="pre-order STL text")
    q.add_argument("--steps", type=int, default=20)
    q.add_argument("--horizon", type=float, default=None, help="seconds; defaults to the time limit")
    q.add_argument("--time-limit", type=float, default=None, help="solver seconds")
    q.add_argument("--out", help="trajectory JSON")
    q.add_argument("--svg", help="SVG drawing of the first plan")
    q.set_defaults(func=cmd_plan)

    q = sub.add_parser("milp", help="MILP utilities")
    msub = q.add_subparsers(dest="milp_command", required=True)
    s = msub.add_parser("solve", help="solve an LP-format file")
    s.add_argument("file")
    s.add_argument("--solver", default="builtin", help="builtin, highs, or a subprocess command")
    s.add_argument("--time-limit", type=float, default=float("inf"))
    s.add_argument("--values", action="store_true")
    s.set_defaults(func=cmd_milp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DiagnosticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
