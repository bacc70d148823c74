import pytest

from diskmdp.errors import EvaluationError, ModelError
from diskmdp.lang import load_model, parse_property
from diskmdp.semantics import (decode_state, enabled_transitions, encode_state, initial_state,
                               is_target, partition_of)

from conftest import corpus_model


def test_initial_state(coin):
    assert initial_state(coin) == (0,)
    m = load_model("var x : 0..3 init 1;\nvar y : 0..9 init 5;\n")
    assert initial_state(m) == (1, 5)


def test_coin_expansion(coin):
    (t,) = enabled_transitions(coin, (0,))
    assert [(b.probability, b.reward, b.target) for b in t] == [(0.5, 0.0, (1,)), (0.5, 0.0, (2,))]


def test_deadlock_state_has_no_transitions(coin):
    assert enabled_transitions(coin, (1,)) == []


def test_die_root_and_reachable_count():
    m = corpus_model("die")
    (t,) = enabled_transitions(m, initial_state(m))
    assert [b.probability for b in t] == [0.5, 0.5]
    # brute-force BFS: 7 internal nodes plus 6 outcomes
    seen, todo = {initial_state(m)}, [initial_state(m)]
    while todo:
        s = todo.pop()
        for tr in enabled_transitions(m, s):
            for b in tr:
                if b.target not in seen:
                    seen.add(b.target)
                    todo.append(b.target)
    assert len(seen) == 13


def test_probability_sum_checked_at_expansion():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> 0.3 : (c'=1) + 0.3 : (c'=2);\n")
    with pytest.raises(ModelError, match="sum to 0.6"):
        enabled_transitions(m, (0,))


def test_sum_within_tolerance_accepted():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> 0.1 : (c'=1) + 0.2 : (c'=2) + 0.7 : true;\n")
    assert len(enabled_transitions(m, (0,))[0]) == 3


def test_update_out_of_domain():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> (c'=3);\n")
    with pytest.raises(ModelError, match=r"c=3 outside 0\.\.2"):
        enabled_transitions(m, (0,))


def test_negative_probability():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> -0.5 : (c'=1) + 1.5 : (c'=2);\n")
    with pytest.raises(ModelError, match="negative probability"):
        enabled_transitions(m, (0,))


def test_zero_probability_branch_dropped():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> c/2 : (c'=1) + 1-c/2 : (c'=2);\n")
    (t,) = enabled_transitions(m, (0,))
    assert [b.target for b in t] == [(2,)]


def test_duplicate_targets_kept_and_order_follows_declaration():
    m = load_model("var c : 0..2 init 0;\n"
                   "[] c=0 -> 0.5 : (c'=1) + 0.5 : (c'=1) {3};\n"
                   "[] true -> (c'=2) reward 1;\n")
    ts = enabled_transitions(m, (0,))
    assert [[b.target for b in t] for t in ts] == [[(1,), (1,)], [(2,)]]
    assert [b.reward for b in ts[0]] == [0.0, 3.0]
    assert ts[1][0].reward == 1.0


def test_alternative_reward_overrides_command_reward():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> 0.5 : (c'=1) {2} + 0.5 : (c'=2) reward 0.5;\n")
    assert [b.reward for b in enabled_transitions(m, (0,))[0]] == [2.0, 0.5]


def test_evaluation_error_names_state():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> 1/c : (c'=1);\n")
    with pytest.raises(EvaluationError, match=r"c=0"):
        enabled_transitions(m, (0,))


def test_partition_of():
    m = load_model("var c : 0..2 init 0;\npartition c+1 bound 3;\n")
    assert partition_of(m, (0,)) == 1 and partition_of(m, (2,)) == 3
    bad = load_model("var c : 0..2 init 0;\npartition c bound 3;\n")
    with pytest.raises(ModelError, match="outside 1..3"):
        partition_of(bad, (0,))
    over = load_model("var c : 0..2 init 0;\npartition c+1 bound 2;\n")
    with pytest.raises(ModelError):
        partition_of(over, (2,))


def test_is_target(coin):
    p = coin.properties[0]
    assert is_target(coin, (2,), p) and not is_target(coin, (0,), p)
    assert not is_target(coin, (2,), parse_property("Pmax=? [F false]"))


def test_expansion_is_deterministic():
    m = corpus_model("brp")
    s = initial_state(m)
    assert enabled_transitions(m, s) == enabled_transitions(m, s)


def test_state_serialisation():
    s = (1, -5, 2**31 - 1)
    data = encode_state(s)
    assert data == b"\x01\x00\x00\x00\xfb\xff\xff\xff\xff\xff\xff\x7f"
    assert decode_state(data, 3) == s
