"""Benchmark maps, their ground-truth checker formulas, and randomised instances."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable, Mapping

from .. import stl
from ..geometry import Environment, Trajectory, environment_from_dict, signed_distance
from ..planner import PlanConfig, plan

SCENARIOS = ("houseworld1", "houseworld2", "chips", "overcooked", "rover", "wall")
_ENV_FILE = {
    "houseworld1": "houseworld", "houseworld2": "houseworld", "chips": "chips",
    "overcooked": "overcooked", "rover": "rover", "wall": "wall",
}
START_CLEARANCE = 0.1
MAX_TRIES = 1000
REFERENCE_SPEED_FRACTION = 0.8
REFERENCE_GAP = 1e-6
REFERENCE_NODES = 2000


@dataclass(frozen=True)
class ScenarioCase:
    scenario: str
    case_id: str
    environment: Environment
    instruction: str
    ground_truth_stl: stl.Formula
    start_overrides: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    time_limit: float = math.inf
    steps: int = 20
    horizon: float = 20.0
    start_zone: tuple[float, float, float, float] | None = None
    source: str = ""  # HouseWorld2: the HouseWorld1 case its time limit derives from

    def plan_config(self, **kw) -> PlanConfig:
        horizon = min(self.horizon, self.time_limit)
        kw.setdefault("collision", len(self.environment.agents) > 1)
        return PlanConfig.for_environment(self.environment, steps=self.steps, horizon=horizon, **kw)

    def with_starts(self, starts: Mapping[str, tuple[float, float]]) -> "ScenarioCase":
        agents = [replace(a, start=tuple(starts.get(a.name, a.start))) for a in self.environment.agents]
        merged = {**self.start_overrides, **{k: tuple(v) for k, v in starts.items()}}
        return replace(self, environment=self.environment.with_agents(agents), start_overrides=merged)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "id": self.case_id,
            "instruction": self.instruction,
            "stl": stl.serialize_preorder(self.ground_truth_stl),
            "start_overrides": {k: list(v) for k, v in self.start_overrides.items()},
            "time_limit": self.time_limit if math.isfinite(self.time_limit) else "inf",
            "steps": self.steps,
            "horizon": self.horizon,
            "environment": self.environment.to_dict(),
            "start_zone": list(self.start_zone) if self.start_zone else None,
            "source": self.source,
        }


def case_from_dict(data: Mapping) -> ScenarioCase:
    env = environment_from_dict(data["environment"])
    tl = data.get("time_limit", "inf")
    tl = math.inf if tl in ("inf", None) else float(tl)
    case = ScenarioCase(data.get("scenario", env.name), data.get("id", ""), env.with_time_limit(tl),
                        data.get("instruction", ""), stl.parse_preorder(data["stl"]), {}, tl,
                        int(data.get("steps", 20)), float(data.get("horizon", 20.0)),
                        tuple(data["start_zone"]) if data.get("start_zone") else None,
                        data.get("source", ""))
    if data.get("start_overrides"):
        case = case.with_starts({k: tuple(v) for k, v in data["start_overrides"].items()})
    return case


def _read(name: str):
    return json.loads(resources.files(__package__).joinpath("data").joinpath(name).read_text())


def load_environment_data(scenario: str) -> tuple[Environment, tuple | None]:
    raw = _read(f"{_ENV_FILE[scenario]}.env.json")
    zone = tuple(raw["start_zone"]) if raw.get("start_zone") else None
    return environment_from_dict(raw), zone


def _cases(scenario: str) -> list[ScenarioCase]:
    env, zone = load_environment_data(scenario)
    return [_from_item(scenario, item, env, zone) for item in _read(f"{scenario}.cases.json")]


def _from_item(scenario: str, item: Mapping, env: Environment, zone) -> ScenarioCase:
    tl = item.get("time_limit", "inf")
    tl = math.inf if tl == "inf" else float(tl)
    f = stl.parse_preorder(item["stl"])
    return ScenarioCase(scenario, item["id"], env.with_time_limit(tl), item["instruction"], f, {}, tl,
                        int(item["steps"]), float(item["horizon"]), zone, item.get("source", ""))


def builtin_cases(scenarios: Iterable[str] = SCENARIOS) -> list[ScenarioCase]:
    out = []
    for s in scenarios:
        if s not in SCENARIOS:
            raise ValueError(f"unknown scenario {s!r}; choose from {', '.join(SCENARIOS)}")
        out += _cases(s)
    return out


def example_case(scenario: str) -> ScenarioCase:
    return _cases(scenario)[0]


# -- randomised starts ------------------------------------------------------------

def _admissible(env: Environment, agent, p, placed) -> bool:
    hw = agent.half_width
    x0, x1, y0, y1 = env.workspace
    if not (x0 + hw <= p[0] <= x1 - hw and y0 + hw <= p[1] <= y1 - hw):
        return False
    for r in env.regions:
        if signed_distance(r, p, -(hw + START_CLEARANCE)) >= 0:
            return False
    for other, q in placed:
        if max(abs(p[0] - q[0]), abs(p[1] - q[1])) < hw + other.half_width + START_CLEARANCE:
            return False
    return True


def randomize(case: ScenarioCase, seed: int) -> ScenarioCase:
    """Resample every agent start in free space of the case's start zone (deterministic per seed).

    A HouseWorld2 case gets its time limit recomputed for the new start.
    """
    if case.scenario == "houseworld2" and case.source:
        src = randomize({c.case_id: c for c in _cases("houseworld1")}[case.source], seed)
        out = _from_item("houseworld2", timed_item(src), src.environment, case.start_zone)
        return replace(out, start_overrides=src.start_overrides, source=case.source,
                       case_id=f"{case.case_id}-seed{seed}")
    rng = random.Random(seed)
    env = case.environment
    zone = case.start_zone or env.workspace
    placed = []
    starts = {}
    for a in env.agents:
        hw = a.half_width
        for _ in range(MAX_TRIES):
            p = (round(rng.uniform(zone[0] + hw, zone[1] - hw), 3), round(rng.uniform(zone[2] + hw, zone[3] - hw), 3))
            if _admissible(env, a, p, placed):
                break
        else:
            raise RuntimeError(f"no admissible start for agent '{a.name}' in {case.case_id} after "
                               f"{MAX_TRIES} samples")
        placed.append((a, p))
        starts[a.name] = p
    out = case.with_starts(starts)
    return replace(out, case_id=f"{case.case_id}-seed{seed}")


# -- HouseWorld2 time limits ------------------------------------------------------

def path_length(traj: Trajectory) -> float:
    total = 0.0
    for pts in traj.waypoints.values():
        total += sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:]))
    return total


def reference_time_limit(case: ScenarioCase) -> float:
    """Duration of the planner's reference trajectory driven at 0.8 of the top speed."""
    # shortest path search with a fixed node budget, so the limit is reproducible
    res = plan(case.ground_truth_stl, case.environment,
               case.plan_config(mip_gap=REFERENCE_GAP, node_limit=REFERENCE_NODES))
    if not res.feasible:
        raise RuntimeError(f"reference plan for {case.case_id} failed: {res.status}")
    v = case.environment.agents[0].v_max
    return path_length(res.trajectory) / (REFERENCE_SPEED_FRACTION * v)


def bound_finally(f: stl.Formula, limit: float) -> stl.Formula:
    """Give every unbounded 'finally' the upper bound ``limit``."""
    if isinstance(f, stl.Finally):
        iv = f.interval if f.interval.bounded else stl.TimeInterval(f.interval.lower, limit)
        return stl.Finally(iv, bound_finally(f.child, limit))
    if isinstance(f, stl.Predicate):
        return f
    if isinstance(f, stl.Not):
        return stl.Not(bound_finally(f.child, limit))
    if isinstance(f, (stl.Globally,)):
        return stl.Globally(f.interval, bound_finally(f.child, limit))
    if isinstance(f, stl.Until):
        return stl.Until(f.interval, bound_finally(f.left, limit), bound_finally(f.right, limit))
    return type(f)(bound_finally(f.left, limit), bound_finally(f.right, limit))


HOUSEWORLD2_SOURCES = ("houseworld1-example", "houseworld1-task-01", "houseworld1-task-03")


def timed_item(c: ScenarioCase) -> dict:
    """HouseWorld2 case record derived from a HouseWorld1 case and its reference duration."""
    limit = reference_time_limit(c)
    secs = stl.format_number(round(limit, 1))
    return {
        "id": c.case_id.replace("houseworld1", "houseworld2"),
        "source": c.case_id,
        "instruction": f"{c.instruction} The task should be completed within {secs} seconds.",
        "stl": stl.serialize_preorder(bound_finally(c.ground_truth_stl, limit)),
        "steps": c.steps, "horizon": c.horizon, "time_limit": limit,
        "reference_length": limit * REFERENCE_SPEED_FRACTION,
    }


def houseworld2_items() -> list[dict]:
    """Recompute the HouseWorld2 case file contents from the HouseWorld1 cases."""
    hw1 = {c.case_id: c for c in _cases("houseworld1")}
    return [timed_item(hw1[cid]) for cid in HOUSEWORLD2_SOURCES]


def refresh_houseworld2(path=None) -> list[dict]:
    items = houseworld2_items()
    target = path or resources.files(__package__).joinpath("data").joinpath("houseworld2.cases.json")
    with open(target, "w") as fh:
        fh.write(json.dumps(items, indent=1) + "\n")
    return items


# -- dataset records --------------------------------------------------------------

def export_dataset(records: Iterable[Mapping]) -> str:
    """JSON lines of {instruction, environment, stl, trajectory}."""
    lines = []
    for r in records:
        traj = r.get("trajectory")
        if isinstance(traj, Trajectory):
            traj = traj.to_dict()
        env = r["environment"]
        if isinstance(env, Environment):
            env = env.to_dict()
        f = r["stl"]
        if isinstance(f, stl.Formula):
            f = stl.serialize_preorder(f)
        lines.append(json.dumps({"instruction": r["instruction"], "environment": env, "stl": f,
                                 "trajectory": traj}, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def import_dataset(text: str) -> list[dict]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        r = json.loads(line)
        out.append({
            "instruction": r["instruction"],
            "environment": environment_from_dict(r["environment"]),
            "stl": stl.parse_preorder(r["stl"]),
            "trajectory": Trajectory.from_dict(r["trajectory"]) if r.get("trajectory") else None,
        })
    return out


__all__ = [
    "SCENARIOS", "ScenarioCase", "builtin_cases", "example_case", "randomize", "case_from_dict",
    "load_environment_data", "reference_time_limit", "refresh_houseworld2", "houseworld2_items",
    "bound_finally", "path_length", "export_dataset", "import_dataset",
]
