import json

import pytest

from autotamp import orchestrator as O
from autotamp import stl
from autotamp.harness import run_case
from autotamp.llm import CacheMiss, CallbackClient, LlmError, Message, RecordingClient, ScriptedClient, \
    transcript_sha256

from . import replay

HW1 = "houseworld1-example"
MANIFEST = replay.manifest()


def run_fixture(name, case_id=None):
    entry = MANIFEST[name]
    c = replay.case(case_id or entry["cases"][0])
    client = replay.client(name)
    if entry["method"] == "syntactic":
        return O.syntactic_loop(c.instruction, c.environment, client)
    return O.run_method(entry["method"], c.instruction, c.environment, client, c.plan_config(),
                        checker=c.ground_truth_stl)


# -- every fixture replays to its recorded outcome --------------------------------

@pytest.mark.parametrize("name", sorted(MANIFEST))
def test_fixture_replays_to_recorded_outcome(name):
    entry = MANIFEST[name]
    for rec in entry["recorded"]:
        c = replay.case(rec["case_id"])
        if entry["method"] == "syntactic":
            r = run_fixture(name, rec["case_id"])
            assert (r.ok, r.iterations) == (rec["ok"], rec["iterations"])
        else:
            r = run_case(c, entry["method"], replay.client(name), timings=False)
            assert r["success"] == rec["success"] and r["iterations"] == rec["iterations"], r["message"]


# -- translation ------------------------------------------------------------------

def test_translate_houseworld2_instruction_through_a_scripted_client():
    from autotamp import scenarios
    c = scenarios.example_case("houseworld2")
    want = "and finally [0, 10] enter(room_purple) finally [0, 10] enter(room_pink)"
    rec = RecordingClient(CallbackClient(lambda t: want))
    O.translate_to_stl(c.instruction, c.environment, rec)
    assert O.translate_to_stl(c.instruction, c.environment, ScriptedClient(rec.entries())) == want


def test_translation_prompt_carries_five_examples_map_and_instruction():
    from autotamp import scenarios
    c = scenarios.example_case("houseworld1")
    seen = []
    O.translate_to_stl("go to the pink room", c.environment, CallbackClient(lambda t: seen.append(t) or "x"))
    system, user = seen[0]
    assert system.role == "system" and user.role == "user"
    assert system.content.count("Instruction:") == 5 and system.content.count("STL:") == 5
    assert "room_pink: x from 11 to 13.5" in system.content
    assert "<current_user_input>" in user.content and "go to the pink room" in user.content


def test_empty_instruction_passes_the_reply_through():
    from autotamp import scenarios
    env = scenarios.example_case("houseworld1").environment
    reply = "  ```\nnot even STL ``` "
    assert O.translate_to_stl("", env, CallbackClient(lambda t: reply)) == reply


def test_transport_failure_carries_the_transcript():
    from autotamp import scenarios
    env = scenarios.example_case("houseworld1").environment

    def broken(t):
        raise LlmError("connection reset", t)
    with pytest.raises(LlmError) as exc:
        O.translate_to_stl("visit the red room", env, CallbackClient(broken))
    assert exc.value.transcript and "visit the red room" in exc.value.transcript[-1].content


def test_scripted_client_misses_loudly():
    client = ScriptedClient([])
    with pytest.raises(CacheMiss):
        client.complete((Message("user", "hello"),))
    o = O.run_method("autotamp", "visit the red room", replay.case(HW1).environment, client,
                     replay.case(HW1).plan_config())
    assert not o.success and "no scripted response" in o.message


def test_transcript_hash_is_content_addressed():
    a = (Message("system", "s"), Message("user", "u"))
    assert transcript_sha256(a) == transcript_sha256(tuple(a))
    assert transcript_sha256(a) != transcript_sha256((Message("system", "s"), Message("user", "u ")))


def test_extract_stl_text():
    assert O.extract_stl_text("```\nSTL: finally enter(a)\n```") == "finally enter(a)"
    assert O.extract_stl_text("Sure.\nand enter(a) enter(b)") == "and enter(a) enter(b)"
    assert O.extract_stl_text("   ") == ""


# -- syntactic loop ---------------------------------------------------------------

def test_syntactic_two_turn_fixture():
    r = run_fixture("syntactic_two_turn")
    assert r.ok and r.iterations == 2


def test_syntactic_clean_first_output():
    c = replay.case(HW1)
    r = O.syntactic_loop(c.instruction, c.environment, CallbackClient(lambda t: stl.serialize_preorder(
        c.ground_truth_stl)))
    assert r.ok and r.iterations == 1 and r.formula == c.ground_truth_stl


def test_syntactic_five_malformed_fixture():
    r = run_fixture("syntactic_five_malformed")
    assert not r.ok and r.iterations == 5 and r.diagnostics


def test_syntactic_reprompt_embeds_the_diagnostic():
    c = replay.case(HW1)
    seen = []

    def respond(t):
        seen.append(t[-1].content)
        return "finally enter(room_nowhere)" if len(seen) == 1 else "finally enter(room_pink)"
    r = O.syntactic_loop(c.instruction, c.environment, CallbackClient(respond))
    assert r.iterations == 2 and "room_nowhere" in seen[1].rsplit("<current_user_input>", 1)[1]


# -- semantic loop ----------------------------------------------------------------

def test_semantic_approve_first():
    o = run_fixture("semantic_approve_first")
    assert o.success and o.iterations["semantic"] == 1


def test_semantic_wrong_order_corrected_on_second_turn():
    o = run_fixture("semantic_wrong_order")
    assert o.success and o.iterations["semantic"] == 2
    replies = [m.content for m in o.transcript if m.role == "assistant"]
    assert replies[0].startswith("finally [0, infinite] and enter(room_yellow)")


def test_semantic_identical_stl_stops_by_no_change_rule():
    o = run_fixture("semantic_identical_stl")
    assert o.iterations["semantic"] == 2 and o.message == "the corrected STL is unchanged"


def test_semantic_request_shows_the_state_sequence():
    o = run_fixture("semantic_approve_first")
    judge = [m.content for m in o.transcript if m.role == "user" and "Planned state sequence" in m.content]
    assert judge and "[[" in judge[0] and "in(room_purple)" in judge[0]


def test_infeasible_plan_is_reported_back_as_semantic_failure():
    c = replay.case(HW1)
    asked = []

    def respond(t):
        asked.append(t[-1].content)
        return "finally [0, 0.5] enter(room_pink)"
    o = O.run_autotamp(c.instruction, c.environment, CallbackClient(respond), c.plan_config(),
                       checker=c.ground_truth_stl)
    assert any("could not find a trajectory" in a for a in asked)
    # the client repeats itself, so the no-change rule ends the loop
    assert not o.success and o.iterations["semantic"] == 2 and o.message == "the corrected STL is unchanged"


def test_success_comes_from_the_monitor_not_the_model():
    c = replay.case("houseworld1-task-02")
    o = O.run_method("autotamp", c.instruction, c.environment, replay.client("houseworld_suite"),
                     c.plan_config(), checker=c.ground_truth_stl)
    assert not o.success and o.trajectory is not None


# -- verdicts ---------------------------------------------------------------------

@pytest.mark.parametrize("reply,ok,why", [
    ("SATISFIED", True, ""),
    ("SATISFIED: both rooms", True, "both rooms"),
    ("VIOLATED: wrong order", False, "wrong order"),
    ("I think it is fine", False, "I think it is fine"),
    ("  satisfied", False, "satisfied"),
])
def test_parse_verdict(reply, ok, why):
    assert O.parse_verdict(reply) == (ok, why)


# -- sub-task baselines -----------------------------------------------------------

def test_subtasks_to_stl_shapes():
    from autotamp import scenarios
    env = scenarios.example_case("chips").environment
    s = lambda seq: stl.serialize_preorder(O.subtasks_to_stl(seq, env))  # noqa: E731
    walls = "globally [0, infinite] not_enter(walls)"
    assert s([("key1", 2)]) == f"and finally [2, 2] enter(key1) {walls}"
    assert s([("key1", 2), ("goal_1", 5)]) == f"and and finally [2, 2] enter(key1) finally [5, 5] enter(goal_1) {walls}"
    three = O.subtasks_to_stl([("key1", 2), ("goal_1", 5), ("key2", 7.5)], env)
    assert sum(isinstance(n, stl.And) for n in stl.walk(three)) == 3
    assert s([("key1", 2), ("goal_1", 5), ("key2", 7.5)]) == (
        f"and and and finally [2, 2] enter(key1) finally [5, 5] enter(goal_1) finally [7.5, 7.5] enter(key2) {walls}")
    assert s([]) == walls


def test_subtasks_to_stl_rejects_non_increasing_times():
    from autotamp import scenarios
    env = scenarios.example_case("chips").environment
    for seq in ([("key1", 2), ("goal_1", 2)], [("key1", 0)], [("key1", 3), ("goal_1", 1)]):
        with pytest.raises(ValueError):
            O.subtasks_to_stl(seq, env)


def test_parse_subtasks():
    env = replay.case(HW1).environment
    assert O.parse_subtasks("- enter(room_pink) @ 4\n\n* enter(Room Purple) @ 9.5\n", env) == \
        [("room_pink", 4.0), ("room_purple", 9.5)]
    for bad in ("", "go to the pink room", "enter(room_nowhere) @ 3", "enter(room_pink) @ 4\nenter(room_red) @ 4"):
        with pytest.raises(ValueError):
            O.parse_subtasks(bad, env)


def test_unreadable_subtasks_get_one_format_reminder_then_fail():
    c = replay.case(HW1)
    asked = []

    def respond(t):
        asked.append(t[-1].content)
        return "first the pink room, then purple"
    o = O.run_naive(c.instruction, c.environment, CallbackClient(respond), c.plan_config(),
                    checker=c.ground_truth_stl)
    assert len(asked) == 2 and "I could not read your answer" in asked[1]
    assert not o.success and "unreadable sub-task plan" in o.message


def test_chips_naive_goal_first_fails():
    o = run_fixture("chips_naive_goal_first")
    assert not o.success and o.trajectory is not None
    assert "specification is violated" in o.message


def test_chips_autotamp_succeeds():
    assert run_fixture("chips_autotamp").success


def test_saycan_gate_skips_the_top_scored_infeasible_option():
    o = run_fixture("saycan_gate")
    assert o.success
    scored = [json.loads(m.content) for m in o.transcript if m.role == "assistant"]
    first = scored[0]
    assert max(first, key=first.get) == "enter(vault)"
    assert "enter(room_a)" in stl.serialize_preorder(o.final_stl)
    assert "vault" not in stl.serialize_preorder(o.final_stl)


def test_saycan_options_exclude_walls_and_end_with_stop():
    env = replay.case("fixture:vault").environment
    opts = O.saycan_options(env)
    assert opts[-1] == O.STOP_OPTION and not any("vault_" in o for o in opts)
    assert "enter(vault)" in opts


def test_feedback_names_the_infeasible_action():
    o = run_fixture("adversarial_feedback")
    asked = [m.content for m in o.transcript if m.role == "user"]
    assert any("cannot be executed" in a for a in asked[1:])


def test_end2end_speed_fix_succeeds_on_second_reply():
    o = run_fixture("end2end_speed")
    assert o.success and o.iterations["replans"] == 2
    second = [m.content for m in o.transcript if m.role == "user"][1]
    assert "Your trajectory has these problems" in second


def test_parse_waypoints_accepts_fenced_json_and_bare_lists():
    env = replay.case(HW1).environment
    t = O.parse_waypoints("```json\n[[3.75, 3.75, 0], [4, 4, 1]]\n```", env)
    assert t.waypoints["robot"][1] == (4.0, 4.0, 1.0)
    from autotamp.diagnostics import DiagnosticError
    with pytest.raises(DiagnosticError):
        O.parse_waypoints("no numbers here", env)


# -- loop caps under adversarial clients ------------------------------------------

def test_caps_hold_for_adversarial_clients():
    o = run_fixture("adversarial_syntactic")
    assert o.iterations["syntactic"] == 5 and max(o.syntactic_attempts) <= 5 and not o.success
    o = run_fixture("adversarial_semantic")
    assert o.iterations["semantic"] == 3 and all(a <= 5 for a in o.syntactic_attempts)
    assert run_fixture("adversarial_feedback").iterations["replans"] == 5
    assert run_fixture("adversarial_end2end").iterations["replans"] == 5


def test_unknown_method_is_rejected():
    c = replay.case(HW1)
    with pytest.raises(ValueError):
        O.run_method("oracle", c.instruction, c.environment, ScriptedClient([]), c.plan_config())


# -- determinism ------------------------------------------------------------------

def test_outcomes_are_byte_reproducible():
    for name in ("semantic_wrong_order", "saycan_gate", "end2end_speed"):
        a = json.dumps(run_fixture(name).to_dict(timings=False), sort_keys=True)
        b = json.dumps(run_fixture(name).to_dict(timings=False), sort_keys=True)
        assert a == b


def test_client_factory(monkeypatch):
    from autotamp.llm import API_KEY_ENV, HttpsChatClient, get_client
    assert len(get_client(f"scripted:{replay.ROOT / 'chips_autotamp.json'}")) > 0
    for bad in ("https:", "carrier-pigeon:x"):
        with pytest.raises(ValueError):
            get_client(bad)
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    with pytest.raises(LlmError):
        HttpsChatClient("some-model").complete((Message("user", "hi"),))
