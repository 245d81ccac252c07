import json
import math

import numpy as np
import pytest

from autotamp import scenarios
from autotamp.diagnostics import Code, DiagnosticError
from autotamp.geometry import (AgentSpec, Environment, Region, Trajectory, check_kinematics, check_starts,
                               environment_from_dict, interpolate, load_environment, sample, signed_distance)

UNIT = Region("unit", 0, 1, 0, 1)


def env_json(**over):
    data = {"workspace": [0, 10, 0, 10], "time_limit": "inf",
            "regions": [{"name": "kitchen", "rect": [1, 3, 1, 3], "attributes": {"color": "red"}}],
            "agents": [{"name": "r", "start": [5, 5], "half_width": 0.2, "v_max": 1}]}
    data.update(over)
    return json.dumps(data)


def diag_codes(text):
    with pytest.raises(DiagnosticError) as exc:
        load_environment(text)
    return {d.code for d in exc.value.diagnostics}


# -- loading ----------------------------------------------------------------------

def test_shipped_houseworld_map_loads():
    env = scenarios.example_case("houseworld1").environment
    names = env.region_names()
    assert {"room_purple", "room_pink", "room_red", "room_green", "room_yellow"} <= set(names)
    assert len(env.agents) == 1


def test_load_environment_roundtrip():
    env = load_environment(env_json())
    assert env.region("kitchen").attributes["color"] == "red"
    assert load_environment(env.to_json()) == env


def test_empty_regions_is_an_open_workspace():
    env = load_environment(env_json(regions=[]))
    assert env.regions == ()


def test_reversed_region_is_rejected():
    bad = [{"name": "k", "rect": [3, 1, 1, 3]}]
    assert Code.INVALID_REGION in diag_codes(env_json(regions=bad))


def test_region_outside_workspace_is_rejected():
    bad = [{"name": "k", "rect": [8, 12, 1, 3]}]
    assert Code.REGION_OUTSIDE_WORKSPACE in diag_codes(env_json(regions=bad))


def test_overlapping_starts_are_rejected():
    agents = [{"name": "a", "start": [5, 5], "half_width": 0.5}, {"name": "b", "start": [5.5, 5], "half_width": 0.5}]
    assert Code.OVERLAPPING_START in diag_codes(env_json(agents=agents))


def test_start_outside_workspace_is_rejected():
    agents = [{"name": "a", "start": [11, 5]}]
    assert Code.START_OUTSIDE_WORKSPACE in diag_codes(env_json(agents=agents))


def test_missing_keys_and_bad_json():
    assert Code.SCHEMA in diag_codes(json.dumps({"workspace": [0, 1, 0, 1]}))
    assert Code.SCHEMA in diag_codes("{not json")


def test_duplicate_region_names_are_rejected():
    regs = [{"name": "k", "rect": [1, 2, 1, 2]}, {"name": "K", "rect": [3, 4, 3, 4]}]
    with pytest.raises(DiagnosticError):
        load_environment(env_json(regions=regs))


def test_groups_resolve_to_members():
    env = scenarios.example_case("chips").environment
    assert {r.name for r in env.resolve("walls")} == {"wall1_low", "wall1_high", "wall2_low", "wall2_high"}
    assert env.has_region("walls") and not env.has_region("moat")


def test_invalid_agent_values():
    with pytest.raises(ValueError):
        AgentSpec("a", (0, 0), half_width=-1)
    with pytest.raises(ValueError):
        AgentSpec("a", (0, 0), v_max=0)


# -- signed distance --------------------------------------------------------------

def test_signed_distance_examples():
    assert signed_distance(UNIT, (0.5, 0.5)) == 0.5
    assert signed_distance(UNIT, (2, 0.5)) == -1.0
    assert signed_distance(UNIT, (0.5, 0.5), 0.2) == pytest.approx(0.3)
    assert signed_distance(UNIT, (1, 0.5)) == 0.0


def test_negative_inflation_grows_the_region():
    assert signed_distance(UNIT, (1.1, 0.5), -0.2) == pytest.approx(0.1)


# -- interpolation ----------------------------------------------------------------

def test_interpolate_examples():
    tr = Trajectory({"r": [(0, 0, 0), (2, 0, 1)]})
    assert interpolate(tr, "r", 0.5) == (1, 0)
    assert interpolate(tr, "r", 1) == (2, 0)
    tr = Trajectory({"r": [(0, 0, 0), (1, 1, 1), (1, 3, 2)]})
    assert interpolate(tr, "r", 1.5) == (1, 2)


def test_interpolate_out_of_range():
    tr = Trajectory({"r": [(0, 0, 0), (2, 0, 1)]})
    with pytest.raises(ValueError):
        interpolate(tr, "r", 1.5)
    with pytest.raises(ValueError):
        interpolate(tr, "r", -0.1)


def test_sample_matches_interpolate_bitwise():
    tr = Trajectory({"r": [(0.3, 0.1, 0), (1.7, 2.9, 0.7), (4.1, 0.2, 1.3), (2, 2, 2.9)]})
    times = np.linspace(0, 2.9, 57)
    xs, ys = sample(tr, "r", times)
    for t, x, y in zip(times, xs, ys):
        assert (x, y) == interpolate(tr, "r", float(t))


def test_trajectory_invariants():
    with pytest.raises(DiagnosticError):
        Trajectory({"r": [(0, 0, 0), (1, 0, 0)]})
    with pytest.raises(DiagnosticError):
        Trajectory({"r": [(0, 0, 1), (1, 0, 2)]})
    with pytest.raises(DiagnosticError):
        Trajectory({"a": [(0, 0, 0), (1, 0, 1)], "b": [(0, 0, 0), (1, 0, 2)]})
    with pytest.raises(DiagnosticError):
        Trajectory.from_json("[1, 2]")


def test_trajectory_json_roundtrip():
    tr = Trajectory({"r": [(0, 0, 0), (1.25, 0.5, 1)]})
    assert Trajectory.from_json(tr.to_json()) == tr


# -- kinematics -------------------------------------------------------------------

def one_agent(v_max, time_limit=math.inf):
    return Environment((0, 10, 0, 10), (), (AgentSpec("r", (0, 0), 0, v_max),), time_limit)


def test_speed_exactly_at_limit_is_fine():
    tr = Trajectory({"r": [(0, 0, 0), (3, 4, 1)]})
    assert check_kinematics(tr, one_agent(5)) == []


def test_speed_violation():
    tr = Trajectory({"r": [(0, 0, 0), (3, 4, 1)]})
    diags = check_kinematics(tr, one_agent(4))
    assert [d.code for d in diags] == [Code.SPEED_VIOLATION]


def test_time_limit_violation():
    tr = Trajectory({"r": [(0, 0, 0), (1, 0, 12)]})
    assert [d.code for d in check_kinematics(tr, one_agent(1, 10))] == [Code.TIME_LIMIT_VIOLATION]


def test_stationary_trajectory_is_compliant():
    tr = Trajectory({"r": [(0, 0, 0)]})
    assert check_kinematics(tr, one_agent(1)) == []
    assert check_starts(tr, one_agent(1)) == []


def test_wrong_start_is_reported():
    tr = Trajectory({"r": [(1, 0, 0), (1, 1, 1)]})
    assert check_starts(tr, one_agent(1))


def test_environment_from_dict_rejects_non_objects():
    with pytest.raises(DiagnosticError):
        environment_from_dict([1, 2, 3])
