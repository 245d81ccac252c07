"""The eight acceptance criteria; each test prints one PASS/FAIL line."""
import math
import random
import time

import numpy as np
import pytest

from autotamp import harness, milp, monitor, scenarios, stl
from autotamp import orchestrator as O
from autotamp.geometry import check_kinematics
from autotamp.milp.simplex import SimplexLP
from autotamp.planner import plan

from . import replay
from .gen import random_formula, random_trajectory, small_env
from .milp_oracle import enumerate_optimum, random_milp
from .oracle import naive_robustness


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {title}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else ""))
        assert ok, detail
    return emit


def test_1_scenario_plannability(report):
    failures, worst = [], 0.0
    names = ("houseworld1", "houseworld2", "chips", "overcooked", "rover", "wall")
    for name in names:
        for seed in range(3):
            c = scenarios.randomize(scenarios.example_case(name), seed)
            cfg = c.plan_config()
            env = c.environment
            if cfg.steps > 24 or len(env.agents) > 4:
                failures.append(f"{c.case_id}: size")
                continue
            t = time.perf_counter()
            res = plan(c.ground_truth_stl, env, cfg)
            worst = max(worst, time.perf_counter() - t)
            ok = (res.feasible and monitor.robustness(c.ground_truth_stl, res.trajectory, env) >= -1e-6
                  and not check_kinematics(res.trajectory, env))
            if not ok:
                failures.append(c.case_id)
    ok = not failures and worst < 600
    report(1, "scenario plannability", ok,
           f"{3 * len(names) - len(failures)}/{3 * len(names)} plans verified, slowest {worst:.1f} s"
           + (f"; failed {failures}" if failures else ""))


def test_2_monitor_oracle_equivalence(report):
    rng = random.Random(2024)
    env = small_env()
    bad = 0
    for _ in range(1000):
        f = random_formula(rng, 4)
        traj = random_trajectory(rng, 10)
        if monitor.robustness(f, traj, env) != naive_robustness(f, traj, env):
            bad += 1
    report(2, "monitor oracle equivalence", bad == 0, f"{1000 - bad}/1000 exact matches")


def test_3_milp_exactness(report):
    rng = np.random.default_rng(7)
    worst_gap, mismatches = 0.0, 0
    for _ in range(20):
        m = random_milp(rng, max_bin=8, max_cont=6)
        ref = enumerate_optimum(m)
        s = milp.solve(m)
        if math.isinf(ref):
            mismatches += s.status != milp.Status.INFEASIBLE
        elif s.status != milp.Status.OPTIMAL:
            mismatches += 1
        else:
            worst_gap = max(worst_gap, abs(s.objective_value - ref))
    worst_res = 0.0
    for _ in range(50):
        n, k = int(rng.integers(1, 31)), int(rng.integers(1, 31))
        A = rng.normal(size=(k, n))
        b = A @ rng.uniform(-1, 1, size=n) + rng.random(k)
        r = SimplexLP(A, ["<="] * k, b, rng.normal(size=n)).solve(np.full(n, -3.0), np.full(n, 3.0))
        worst_res = max(worst_res, float(np.max(A @ r.x - b)), 0.0)
    ok = mismatches == 0 and worst_gap <= 1e-6 and worst_res < 1e-7
    report(3, "MILP exactness", ok,
           f"status mismatches {mismatches}, max gap {worst_gap:.1e}, max residual {worst_res:.1e}")


def test_4_parser_roundtrip_and_nnf(report):
    rng = random.Random(99)
    env = small_env()
    broken = sum(stl.parse_preorder(stl.serialize_preorder(f)) != f
                 for f in (random_formula(rng, 8) for _ in range(1000)))
    worst = 0.0
    for _ in range(500):
        f = random_formula(rng, 5)
        traj = random_trajectory(rng, 10)
        a, b = monitor.robustness(f, traj, env), monitor.robustness(stl.to_nnf(f), traj, env)
        if a != b:
            worst = max(worst, abs(a - b))
    ok = broken == 0 and worst <= 1e-9
    report(4, "parser round-trip and NNF", ok, f"{1000 - broken}/1000 round trips, max NNF difference {worst:.1e}")


def test_5_subtask_conversion(report):
    env = scenarios.example_case("chips").environment
    walls = "globally [0, infinite] not_enter(walls)"
    expected = {
        1: f"and finally [2, 2] enter(key1) {walls}",
        2: f"and and finally [2, 2] enter(key1) finally [6, 6] enter(goal_1) {walls}",
        3: f"and and and finally [2, 2] enter(key1) finally [6, 6] enter(goal_1) finally [9.5, 9.5] enter(key2) {walls}",
    }
    seq = [("key1", 2), ("goal_1", 6), ("key2", 9.5)]
    got = {k: stl.serialize_preorder(O.subtasks_to_stl(seq[:k], env)) for k in expected}
    ok = got == expected and stl.serialize_preorder(O.subtasks_to_stl([], env)) == walls
    report(5, "sub-task to STL conversion", ok, "1, 2 and 3 step sequences match" if ok else str(got))


def _fixture_outcome(name):
    entry = replay.manifest()[name]
    c = replay.case(entry["cases"][0])
    return O.run_method(entry["method"], c.instruction, c.environment, replay.client(name), c.plan_config(),
                        checker=c.ground_truth_stl)


def test_6_loop_caps(report):
    syn = _fixture_outcome("adversarial_syntactic")
    sem = _fixture_outcome("adversarial_semantic")
    fb = _fixture_outcome("adversarial_feedback")
    e2e = _fixture_outcome("adversarial_end2end")
    same = _fixture_outcome("semantic_identical_stl")
    c = replay.case("houseworld1-example")
    five = O.syntactic_loop(c.instruction, c.environment, replay.client("syntactic_five_malformed"))
    ok = (max(syn.syntactic_attempts) <= 5 and max(sem.syntactic_attempts) <= 5 and five.iterations == 5
          and sem.iterations["semantic"] <= 3 and fb.iterations["replans"] <= 5 and e2e.iterations["replans"] <= 5
          and same.iterations["semantic"] == 2 and same.message == "the corrected STL is unchanged")
    report(6, "loop-cap compliance", ok,
           f"syntactic {max(syn.syntactic_attempts)}, semantic {sem.iterations['semantic']}, "
           f"feedback {fb.iterations['replans']}, end2end {e2e.iterations['replans']}, "
           f"no-change stop at round {same.iterations['semantic']}")


def test_7_chips_ordering(report):
    naive = _fixture_outcome("chips_naive_goal_first")
    auto = _fixture_outcome("chips_autotamp")
    ok = not naive.success and auto.success
    report(7, "Chip's Challenge ordering", ok, f"naive success={naive.success}, autotamp success={auto.success}")


def test_8_end_to_end_determinism(report):
    def full_suite():
        out = []
        for name, entry in replay.manifest().items():
            if entry["method"] == "syntactic":
                continue
            cases = [replay.case(cid) for cid in entry["cases"]]
            out.append(harness.run_suite(cases, entry["method"], replay.client(name), timings=False).to_jsonl())
        return "".join(out)
    a, b = full_suite(), full_suite()
    report(8, "end-to-end determinism", a == b, f"{len(a.splitlines())} records, {len(a)} bytes, identical={a == b}")
