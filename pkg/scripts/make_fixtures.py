"""Records the scripted-client fixtures used by the test suite.

Each fixture drives one method on one or more cases with a hand-written
responder, wrapped in a RecordingClient. The recorded (transcript hash ->
reply) table goes to fixtures/<name>.json and fixtures/manifest.json lists
what to replay. Rerun whenever a prompt template or map description changes.
"""
import json
import pathlib
import sys

from autotamp import orchestrator as O
from autotamp import scenarios, stl
from autotamp.harness import run_case
from autotamp.llm import CallbackClient, RecordingClient
from autotamp.planner import plan

ROOT = pathlib.Path(__file__).resolve().parents[1]
OUT = ROOT / "fixtures"

HW1 = "houseworld1-example"


def case(case_id):
    if case_id.startswith("fixture:"):
        return scenarios.case_from_dict(json.loads((OUT / "cases" / f"{case_id[8:]}.json").read_text()))
    return {c.case_id: c for c in scenarios.builtin_cases()}[case_id]


def gt(case_id):
    return stl.serialize_preorder(case(case_id).ground_truth_stl)


def kind(transcript):
    first = transcript[0].content.split("\n", 1)[0]
    for key, name in (("translate", "translate"), ("check whether", "judge"),
                      ("plan tasks", "tasks"), ("plan trajectories", "waypoints")):
        if key in first:
            return name
    raise ValueError(first)


def turns(transcript):
    """Number of earlier exchanges in this conversation."""
    return transcript[-1].content.count("<previous_user_input>")


def stl_in_request(transcript):
    current = transcript[-1].content.rsplit("<current_user_input>", 1)[-1]
    for line in current.splitlines():
        if line.startswith("STL used for planning:"):
            return line.split(":", 1)[1].strip()
    return None


# -- responders -------------------------------------------------------------------

def syntactic_two_turn(t):
    return "and finally [0, infinite] enter(room_purple)" if turns(t) == 0 else gt(HW1)


def always_malformed(t):
    return "and and enter(room_purple)"


def approve_first(case_id):
    def respond(t):
        return gt(case_id) if kind(t) == "translate" else "SATISFIED: both rooms are visited."
    return respond


WRONG_ORDER = "finally [0, infinite] and enter(room_yellow) finally [0, infinite] enter(room_green)"


def wrong_order_corrected(t):
    case_id = "houseworld1-task-01"
    if kind(t) == "translate":
        return WRONG_ORDER if turns(t) == 0 else gt(case_id)
    if stl_in_request(t) == gt(case_id):
        return "SATISFIED"
    return "VIOLATED: the yellow restroom is visited before the green bedroom."


def identical_stl(t):
    if kind(t) == "translate":
        return gt(HW1)
    return "VIOLATED: I am not sure the rooms are right."


CHIPS_GOAL_FIRST = "\n".join([
    "enter(goal_1) @ 12.5", "enter(goal_2) @ 27.5", "enter(goal_3) @ 35", "enter(key2) @ 45", "enter(key1) @ 57.5",
])


def chips_goal_first(t):
    return CHIPS_GOAL_FIRST


def saycan_scores(t, options):
    """The vault always scores best; it is sealed by walls, so the gate must skip it."""
    taken = t[-1].content.count(" @ ")
    prefs = ["enter(vault)", "enter(room_a)" if taken == 0 else "done()", "done()", "enter(room_b)"]
    return [-float(prefs.index(o)) if o in prefs else -10.0 for o in options]


def waypoint_replies(case_id):
    """A too-fast version of a good plan first, then the good plan."""
    c = case(case_id)
    traj = plan(c.ground_truth_stl, c.environment, c.plan_config()).trajectory
    good = {a: [[round(x, 4), round(y, 4), round(tt, 4)] for x, y, tt in pts] for a, pts in traj.waypoints.items()}
    fast = {a: [[x, y, round(tt / 4, 4)] for x, y, tt in pts] for a, pts in good.items()}

    def respond(t):
        return json.dumps(fast if turns(t) == 0 else good)
    return respond


def three_houses(t):
    """Honest on two cases; on task-02 it translates into the wrong rooms and approves anything."""
    text = t[-1].content
    if kind(t) == "judge":
        return "SATISFIED"
    for cid in ("houseworld1-example", "houseworld1-task-01"):
        if case(cid).instruction in text:
            return gt(cid)
    return "finally [0, infinite] enter(room_cyan)"


ROOMS = ["room_green", "room_yellow", "room_purple", "room_orange", "room_gray"]


def never_satisfied(t):
    """A fresh valid STL each round and a judge that always objects."""
    if kind(t) == "translate":
        return f"finally [0, infinite] enter({ROOMS[turns(t) % len(ROOMS)]})"
    return "VIOLATED: wrong room."


def never_executable(t):
    return "enter(room_lightpink) @ 0.5\nenter(room_cyan) @ 1"


def always_speeding(t):
    return json.dumps({"robot": [[3.75, 3.75, 0], [8.5, 9.0, 0.5], [12.0, 2.0, 1.0]]})


# -- fixture table ----------------------------------------------------------------

FIXTURES = [
    ("syntactic_two_turn", "syntactic", [HW1], syntactic_two_turn, None),
    ("syntactic_five_malformed", "syntactic", [HW1], always_malformed, None),
    ("semantic_approve_first", "autotamp", [HW1], approve_first(HW1), None),
    ("semantic_wrong_order", "autotamp", ["houseworld1-task-01"], wrong_order_corrected, None),
    ("semantic_identical_stl", "autotamp", [HW1], identical_stl, None),
    ("chips_naive_goal_first", "naive", ["chips-example"], chips_goal_first, None),
    ("chips_autotamp", "autotamp", ["chips-example"], approve_first("chips-example"), None),
    ("saycan_gate", "saycan", ["fixture:vault"], lambda t: "", saycan_scores),
    ("end2end_speed", "end2end", [HW1], None, None),
    ("houseworld_suite", "autotamp", [HW1, "houseworld1-task-01", "houseworld1-task-02"], three_houses,
     None),
    ("adversarial_syntactic", "autotamp", [HW1], always_malformed, None),
    ("adversarial_semantic", "autotamp", [HW1], never_satisfied, None),
    ("adversarial_feedback", "feedback", [HW1], never_executable, None),
    ("adversarial_end2end", "end2end", [HW1], always_speeding, None),
]


def vault_case() -> dict:
    ring = [("vault_n", 6.5, 9.5, 9.0, 9.5), ("vault_s", 6.5, 9.5, 6.5, 7.0),
            ("vault_w", 6.5, 7.0, 6.5, 9.5), ("vault_e", 9.0, 9.5, 6.5, 9.5)]
    regions = [{"name": n, "rect": [x0, x1, y0, y1], "attributes": {"group": "walls", "color": "black"}}
               for n, x0, x1, y0, y1 in ring]
    regions += [
        {"name": "vault", "rect": [7.5, 8.5, 7.5, 8.5], "attributes": {"color": "gold"}},
        {"name": "room_a", "rect": [1.0, 3.0, 1.0, 3.0], "attributes": {"color": "lightblue"}},
        {"name": "room_b", "rect": [1.0, 3.0, 7.0, 9.0], "attributes": {"color": "lightgreen"}},
    ]
    env = {"name": "vault", "workspace": [0, 10, 0, 10], "time_limit": "inf", "regions": regions,
           "agents": [{"name": "robot", "start": [5.0, 2.0], "half_width": 0.2, "v_max": 1.0}]}
    return {"scenario": "vault", "id": "vault", "instruction": "Go to room a, or the vault if you can.",
            "stl": "and finally [0, infinite] enter(room_a) globally [0, infinite] not_enter(walls)",
            "steps": 16, "horizon": 16.0, "time_limit": "inf", "environment": env}


def main() -> int:
    OUT.mkdir(exist_ok=True)
    (OUT / "cases").mkdir(exist_ok=True)
    (OUT / "cases" / "vault.json").write_text(json.dumps(vault_case(), indent=1) + "\n")
    manifest = []
    for name, method, case_ids, respond, score in FIXTURES:
        if name == "end2end_speed":
            respond = waypoint_replies(HW1)
        rec = RecordingClient(CallbackClient(respond, score))
        results = []
        for cid in case_ids:
            c = case(cid)
            if method == "syntactic":
                r = O.syntactic_loop(c.instruction, c.environment, rec)
                results.append({"case_id": cid, "ok": r.ok, "iterations": r.iterations})
            else:
                r = run_case(c, method, rec, timings=False)
                results.append({"case_id": cid, "success": r["success"], "iterations": r["iterations"]})
        rec.save(OUT / f"{name}.json")
        manifest.append({"name": name, "method": method, "cases": case_ids, "recorded": results})
        print(name, json.dumps(results), file=sys.stderr)
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
