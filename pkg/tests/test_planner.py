import itertools
import json
import pathlib

import numpy as np
import pytest

from autotamp import monitor, scenarios, stl
from autotamp.diagnostics import Code, DiagnosticError
from autotamp.geometry import AgentSpec, Environment, Region, check_kinematics
from autotamp.planner import (PlanConfig, _free_space_disconnected, compile, executability_check, plan,
                              subtask_formula, subtask_plan)

from .gen import small_env

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def vault_case():
    return scenarios.case_from_dict(json.loads((FIXTURES / "cases" / "vault.json").read_text()))


def one_agent(start, regions, v_max=1.0):
    return Environment((0, 10, 0, 10), tuple(regions), (AgentSpec("r", start, 0.1, v_max),))


# -- compile ----------------------------------------------------------------------

def test_finally_over_horizon_has_one_binary_per_step():
    cfg = PlanConfig(steps=4, horizon=4.0, collision=False)
    model, vm = compile(stl.eventually(stl.enter("b"), 0, 4), small_env(), cfg)
    assert vm.binary_count() == 5 and len(model.binaries) == 5
    zs = {v for vs in vm.predicates.values() for v in vs}
    root = [c for c in model.constraints if {v for v, _ in c.terms} == zs]
    assert len(root) == 1 and root[0].sense == ">=" and root[0].rhs == 1.0


def test_empty_window_is_reported_with_the_interval():
    cfg = PlanConfig(steps=4, horizon=4.0, collision=False)
    with pytest.raises(DiagnosticError) as exc:
        compile(stl.eventually(stl.enter("b"), 5, 6), small_env(), cfg)
    d = exc.value.diagnostics[0]
    assert d.code == Code.EMPTY_WINDOW and "[5, 6]" in d.message


def test_unknown_region_is_rejected_before_encoding():
    res = plan(stl.eventually(stl.enter("nowhere")), small_env(), PlanConfig(steps=4, horizon=4.0))
    assert res.status == "error" and res.diagnostics[0].code == Code.UNKNOWN_REGION


def test_wall_scenario_compiles_nested_finally_globally():
    c = scenarios.example_case("wall")
    model, vm = compile(c.ground_truth_stl, c.environment, c.plan_config())
    assert any(isinstance(n, stl.Finally) and isinstance(n.child, stl.Globally) for n in stl.walk(c.ground_truth_stl))
    assert vm.aggregators and model.binaries


def test_chips_until_is_compiled_per_door_and_key():
    c = scenarios.example_case("chips")
    _, vm = compile(c.ground_truth_stl, c.environment, c.plan_config())
    preds = {p for p, _, _ in vm.predicates}
    for j in (1, 2):
        assert f"not_enter(door{j})" in preds and f"enter(key{j})" in preds


def test_config_rejects_off_grid_steps():
    with pytest.raises(ValueError):
        PlanConfig(steps=3, horizon=1.0)
    cfg = PlanConfig.for_environment(small_env().with_time_limit(7.35), steps=20)
    assert cfg.horizon <= 7.35 and round(cfg.dt / 0.1, 9) == int(round(cfg.dt / 0.1))


# -- plan -------------------------------------------------------------------------

def test_houseworld_example_from_two_starts():
    c = scenarios.example_case("houseworld1")
    for start in ((3.75, 3.75), (1.5, 5.5)):
        case = c.with_starts({"robot": start})
        res = plan(case.ground_truth_stl, case.environment, case.plan_config())
        assert res.feasible and res.robustness >= 0.05 - 1e-6
        assert monitor.satisfied(stl.eventually(stl.enter("room_purple")), res.trajectory, case.environment)
        assert monitor.satisfied(stl.eventually(stl.enter("room_pink")), res.trajectory, case.environment)


def test_always_inside_from_inside_stays_put():
    env = one_agent((2.5, 2.5), [Region("home", 1, 4, 1, 4)])
    res = plan(stl.always(stl.enter("home"), 0, 4), env, PlanConfig(steps=8, horizon=4.0, collision=False))
    assert res.feasible
    pts = np.array(res.trajectory.waypoints["r"])[:, :2]
    assert np.abs(pts - (2.5, 2.5)).max() <= 1e-6


def test_unreachable_window_is_infeasible():
    # L-inf distance from the start is v_max * 1 s + 1
    env = one_agent((0.5, 0.5), [Region("far", 2.5, 3.5, 0, 1)])
    f = stl.eventually(stl.enter("far"), 0, 1)
    res = plan(f, env, PlanConfig(steps=20, horizon=2.0, collision=False))
    assert res.status == "infeasible" and not res.feasible
    assert res.diagnostics[0].code == Code.INFEASIBLE
    for steps, horizon in ((10, 2.0), (10, 1.0), (5, 1.0)):
        assert not plan(f, env, PlanConfig(steps=steps, horizon=horizon, collision=False)).feasible


def test_waypoint_times_sit_on_the_monitor_grid():
    c = scenarios.example_case("houseworld1")
    res = plan(c.ground_truth_stl, c.environment, c.plan_config())
    for pts in res.trajectory.waypoints.values():
        ticks = [t / 0.1 for _, _, t in pts]
        assert all(abs(k - round(k)) < 1e-9 for k in ticks)


@pytest.mark.parametrize("case", scenarios.builtin_cases(), ids=lambda c: c.case_id)
def test_soundness_over_the_scenario_suite(case):
    env = case.environment
    res = plan(case.ground_truth_stl, env, case.plan_config())
    assert res.feasible, res.diagnostics
    assert monitor.robustness(case.ground_truth_stl, res.trajectory, env) >= -1e-6
    assert check_kinematics(res.trajectory, env) == []
    if len(env.agents) > 1:
        for a, b in itertools.combinations(env.agents, 2):
            pa = np.array(res.trajectory.waypoints[a.name])[:, :2]
            pb = np.array(res.trajectory.waypoints[b.name])[:, :2]
            sep = np.abs(pa - pb).max(axis=1)
            assert sep.min() >= a.half_width + b.half_width - 1e-6


def test_collision_constraints_keep_agents_apart():
    env = Environment((0, 10, 0, 10), (Region("left", 0, 2, 4, 6), Region("right", 8, 10, 4, 6)), (
        AgentSpec("a", (1, 5), 0.3, 3.0), AgentSpec("b", (9, 5), 0.3, 3.0)))
    swap = stl.conj(stl.eventually(stl.enter("right"), 3, 4), stl.eventually(stl.enter("left"), 3, 4))
    res = plan(swap, env, PlanConfig(steps=8, horizon=4.0, collision=True))
    assert res.feasible
    pa = np.array(res.trajectory.waypoints["a"])[:, :2]
    pb = np.array(res.trajectory.waypoints["b"])[:, :2]
    assert np.abs(pa - pb).max(axis=1).min() >= 0.6 - 1e-6


# -- executability ----------------------------------------------------------------

def test_adjacent_room_in_generous_time_is_executable():
    c = scenarios.example_case("houseworld1")
    assert executability_check(("room_blue", 10.0), (3.75, 3.75), c.environment, c.plan_config())


def test_room_sealed_by_walls_is_not_executable():
    c = vault_case()
    cfg = c.plan_config()
    assert not executability_check(("vault", 30.0), (5.0, 2.0), c.environment, cfg)
    assert executability_check(("room_a", 10.0), (5.0, 2.0), c.environment, cfg)


def test_chips_goal_behind_a_closed_door_is_not_executable():
    c = scenarios.example_case("chips")
    cfg = c.plan_config()
    assert not executability_check(("goal_1", 40.0), (1.0, 5.0), c.environment, cfg, avoid=["door1"])
    assert executability_check(("goal_1", 40.0), (1.0, 5.0), c.environment, cfg)


def test_unknown_region_is_not_executable():
    c = scenarios.example_case("houseworld1")
    assert not executability_check(("room_nowhere", 5.0), (3.75, 3.75), c.environment, c.plan_config())


def test_subtask_formula_shape():
    c = scenarios.example_case("chips")
    f = subtask_formula("goal_1", 2.5, c.environment, ["door1"])
    assert stl.serialize_preorder(f) == ("and and finally [2.5, 2.5] enter(goal_1) globally [0, infinite] "
                                         "not_enter(walls) globally [0, infinite] not_enter(door1)")
    hw = scenarios.example_case("houseworld1").environment
    assert subtask_formula("room_blue", 1, hw) == stl.eventually(stl.enter("room_blue"), 1, 1)


def walled_env(walls, start=(1.0, 5.0)):
    regions = [Region(f"w{i}", *rect, attributes={"group": "walls"}) for i, rect in enumerate(walls)]
    regions.append(Region("goal", 8, 9.5, 4, 6))
    return Environment((0, 10, 0, 10), tuple(regions), (AgentSpec("r", start, 0.2, 2.0),))


def test_free_space_check_splits_and_gaps():
    cfg = PlanConfig(steps=10, horizon=10.0, collision=False)
    split = walled_env([(5, 5.6, 0, 10)])
    assert _free_space_disconnected("goal", {"r": (1.0, 5.0)}, split, cfg, [])
    gap = walled_env([(5, 5.6, 0, 4), (5, 5.6, 5, 10)])
    assert not _free_space_disconnected("goal", {"r": (1.0, 5.0)}, gap, cfg, [])
    assert subtask_plan(("goal", 8.0), (1.0, 5.0), gap, cfg).feasible
    # not_enter only forbids being wholly inside a wall, so an agent straddling a seam
    # or a gap narrower than itself is fully inside neither wall
    for walls in ([(5, 5.6, 0, 6), (5, 5.6, 6, 10)], [(5, 5.6, 0, 4.8), (5, 5.6, 5.1, 10)]):
        env = walled_env(walls)
        assert not _free_space_disconnected("goal", {"r": (1.0, 5.0)}, env, cfg, [])
        assert subtask_plan(("goal", 8.0), (1.0, 5.0), env, cfg).feasible


def test_free_space_check_never_contradicts_the_planner():
    rng = np.random.default_rng(2)
    cfg = PlanConfig(steps=6, horizon=6.0, collision=False, time_limit=60)
    pruned = 0
    for _ in range(8):
        walls = []
        for _ in range(int(rng.integers(1, 4))):
            x = float(rng.uniform(3, 7))
            if rng.random() < 0.3:
                walls.append((x, x + 0.5, 0, 10))
            else:
                y = float(rng.uniform(1, 9))
                walls += [(x, x + 0.5, 0, y - float(rng.uniform(0, 1))), (x, x + 0.5, y, 10)]
        env = walled_env(walls)
        if _free_space_disconnected("goal", {"r": (1.0, 5.0)}, env, cfg, []):
            pruned += 1
            f = subtask_formula("goal", 6.0, env)
            assert not plan(f, env, cfg).feasible
    assert pruned
