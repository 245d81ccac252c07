import random

import pytest

from autotamp import monitor, scenarios, stl
from autotamp.diagnostics import Code, DiagnosticError
from autotamp.stl import INF, And, Equiv, Finally, Globally, Imply, Not, Or, Predicate, TimeInterval, Until

from .gen import random_formula, random_trajectory, small_env

A, B, C = stl.enter("a"), stl.enter("b"), stl.enter("c")


def codes(text, parse=stl.parse_preorder):
    with pytest.raises(DiagnosticError) as exc:
        parse(text)
    return [d.code for d in exc.value.diagnostics]


# -- pre-order parsing ------------------------------------------------------------

def test_parse_houseworld_shorthand():
    f = stl.parse_preorder("and finally enter(room_purple) finally enter(room_pink)")
    assert f == And(Finally(TimeInterval(0, INF), Predicate("enter", "room_purple")),
                    Finally(TimeInterval(0, INF), Predicate("enter", "room_pink")))


def test_parse_single_predicate():
    assert stl.parse_preorder("enter(goal_1)") == Predicate("enter", "goal_1")


def test_leftover_tokens_are_unbalanced():
    assert codes("until [286, 348] enter(a) enter(b) enter(c)") == [Code.UNBALANCED_STRUCTURE]


def test_missing_operand_is_arity_mismatch():
    assert codes("and enter(a)") == [Code.ARITY_MISMATCH]
    assert codes("until [0, 1] enter(a)") == [Code.ARITY_MISMATCH]


def test_unknown_keyword_named_verbatim():
    with pytest.raises(DiagnosticError) as exc:
        stl.parse_preorder("and enter(a) sometimes enter(b)")
    d = exc.value.diagnostics[0]
    assert d.code == Code.UNKNOWN_TOKEN and "'sometimes'" in d.message and d.token_index == 2


def test_diagnostic_messages_quote_the_offending_token():
    with pytest.raises(DiagnosticError) as exc:
        stl.parse_preorder("enter(a) enter(b)")
    assert "enter(b)" in exc.value.diagnostics[0].message


@pytest.mark.parametrize("word", ["not", "negation"])
def test_negation_spellings(word):
    assert stl.parse_preorder(f"{word} enter(a)") == Not(A)
    assert stl.serialize_preorder(Not(A)) == "not enter(a)"


def test_keyword_aliases_and_infinity_words():
    f = stl.parse_preorder("imply eventually [0, inf] enter(a) always [2, infinity] enter(b)")
    assert f == Imply(Finally(TimeInterval(0, INF), A), Globally(TimeInterval(2, INF), B))
    assert stl.parse_preorder("equal enter(a) enter(b)") == Equiv(A, B)


def test_region_names_are_normalized():
    assert stl.parse_preorder("enter(Blue Restroom2)") == Predicate("enter", "blue_restroom2")


def test_interval_is_optional_and_defaults_to_unbounded():
    assert stl.parse_preorder("globally enter(a)") == Globally(TimeInterval(0, INF), A)


def test_decimal_interval_bounds():
    f = stl.parse_preorder("finally [0.5, 13.856476953831706] enter(a)")
    assert f.interval == TimeInterval(0.5, 13.856476953831706)
    assert stl.parse_preorder(stl.serialize_preorder(f)) == f


def test_until_is_binary_with_interval():
    f = stl.parse_preorder("until [0, 5] not_enter(door1) enter(key1)")
    assert f == Until(TimeInterval(0, 5), stl.not_enter("door1"), stl.enter("key1"))


def test_empty_input_fails():
    assert codes("") and codes("   ")


# -- serialization ----------------------------------------------------------------

def test_serialize_predicate():
    assert stl.serialize_preorder(Predicate("enter", "goal_1")) == "enter(goal_1)"


def test_serialize_uses_infinite_token():
    f = And(stl.eventually(A), stl.always(stl.not_enter("walls")))
    assert stl.serialize_preorder(f) == "and finally [0, infinite] enter(a) globally [0, infinite] not_enter(walls)"


def test_serialize_finite_intervals():
    assert stl.serialize_preorder(stl.eventually(A, 2, 2)) == "finally [2, 2] enter(a)"
    assert stl.serialize_preorder(stl.always(A, 0.5, 3)) == "globally [0.5, 3] enter(a)"


def test_roundtrip_random_trees():
    rng = random.Random(7)
    for _ in range(300):
        f = random_formula(rng, 8)
        assert stl.parse_preorder(stl.serialize_preorder(f)) == f
        assert stl.parse_inorder(stl.serialize_inorder(f)) == f


# -- in-order ---------------------------------------------------------------------

def test_inorder_houseworld2():
    f = stl.parse_inorder("(finally[0, 10] enter(room_purple) and finally[0, 10] enter(room_pink))")
    assert f == And(stl.eventually(stl.enter("room_purple"), 0, 10), stl.eventually(stl.enter("room_pink"), 0, 10))


def test_inorder_predicate():
    assert stl.parse_inorder("enter(a)") == A


def test_inorder_grouping():
    assert stl.parse_inorder("(enter(a) and enter(b)) or enter(c)") == Or(And(A, B), C)
    assert stl.parse_inorder("enter(a) and (enter(b) or enter(c))") == And(A, Or(B, C))


def test_inorder_unbalanced_parentheses():
    assert Code.UNBALANCED_STRUCTURE in codes("(enter(a) and enter(b)", stl.parse_inorder)
    assert Code.UNBALANCED_STRUCTURE in codes("enter(a) and enter(b))", stl.parse_inorder)


# -- validation -------------------------------------------------------------------

def test_validate_unknown_region():
    env = scenarios.example_case("chips").environment
    diags = stl.validate(stl.eventually(stl.enter("goal_9")), env)
    assert [d.code for d in diags] == [Code.UNKNOWN_REGION]
    assert "goal_9" in diags[0].message


def test_validate_reversed_interval():
    diags = stl.validate(stl.always(A, 5, 2), small_env())
    assert [d.code for d in diags] == [Code.MALFORMED_INTERVAL]


def test_validate_negative_lower_bound():
    diags = stl.validate(stl.eventually(A, -1, 2), small_env())
    assert [d.code for d in diags] == [Code.MALFORMED_INTERVAL]


def test_validate_one_diagnostic_per_violation():
    f = And(stl.eventually(stl.enter("x"), 3, 1), stl.always(stl.enter("y")))
    assert sorted(d.code.value for d in stl.validate(f, small_env())) == \
        ["malformed-interval", "unknown-region", "unknown-region"]


def test_validate_chips_ground_truth_is_clean():
    c = scenarios.example_case("chips")
    assert stl.validate(c.ground_truth_stl, c.environment) == []


def test_validate_accepts_group_names():
    c = scenarios.example_case("chips")
    assert stl.validate(stl.always(stl.not_enter("walls")), c.environment) == []


# -- negation normal form ---------------------------------------------------------

def is_nnf(f):
    return not any(isinstance(n, (Not, Imply, Equiv)) for n in stl.walk(f))


def test_nnf_duality():
    assert stl.to_nnf(Not(stl.eventually(A, 0, 3))) == stl.always(stl.not_enter("a"), 0, 3)
    assert stl.to_nnf(Not(stl.always(A, 0, 3))) == stl.eventually(stl.not_enter("a"), 0, 3)


def test_nnf_overcooked_implication():
    f = Imply(stl.enter("ing_1"), stl.eventually(stl.enter("cook"), 0, 3))
    assert stl.to_nnf(f) == Or(stl.not_enter("ing_1"), stl.eventually(stl.enter("cook"), 0, 3))


def test_nnf_predicates_flip():
    assert stl.to_nnf(Not(A)) == stl.not_enter("a")
    assert stl.to_nnf(Not(stl.not_enter("a"))) == A
    assert stl.to_nnf(Not(And(A, B))) == Or(stl.not_enter("a"), stl.not_enter("b"))


def test_nnf_equivalence_expands():
    f = stl.to_nnf(Equiv(A, B))
    assert f == And(Or(stl.not_enter("a"), B), Or(stl.not_enter("b"), A))


def test_nnf_negated_until_has_no_negations_and_same_robustness():
    env = small_env()
    rng = random.Random(3)
    for iv in (TimeInterval(0, INF), TimeInterval(0.5, 2), TimeInterval(1, INF), TimeInterval(0, 0)):
        f = Not(Until(iv, A, B))
        g = stl.to_nnf(f)
        assert is_nnf(g)
        for _ in range(20):
            tr = random_trajectory(rng)
            a, b = monitor.robustness(f, tr, env), monitor.robustness(g, tr, env)
            assert a == b or abs(a - b) <= 1e-9


def test_nnf_random_formulas_are_in_nnf():
    rng = random.Random(11)
    for _ in range(200):
        assert is_nnf(stl.to_nnf(random_formula(rng, 6)))


# -- helpers ----------------------------------------------------------------------

def test_conj_is_left_nested():
    assert stl.conj(A, B, C) == And(And(A, B), C)
    with pytest.raises(ValueError):
        stl.conj()


def test_formulas_are_hashable_values():
    assert len({stl.parse_preorder("and enter(a) enter(b)"), And(A, B)}) == 1
    assert stl.depth(And(A, Not(B))) == 3
    assert [p.region for p in stl.predicates(And(A, Not(B)))] == ["a", "b"]
