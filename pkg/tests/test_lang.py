import pytest
from hypothesis import given, settings, strategies as st

from diskmdp.errors import EvaluationError, ModelError, ModelSyntaxError, ModelTypeError
from diskmdp.lang import (ast as A, compile_expr, evaluate, format_expr, format_model,
                          load_model, parse_expression, parse_model, parse_partition,
                          parse_property, select_property, type_check)
from diskmdp.lang.typecheck import with_partition

from conftest import COIN, corpus_model
from diskmdp.corpus import MODELS


# -- parsing ----------------------------------------------------------------------

def test_coin_structure():
    m = parse_model(COIN)
    assert len(m.variables) == 1 and len(m.commands) == 1
    assert len(m.commands[0].alternatives) == 2
    v = m.variables[0]
    assert (v.name, format_expr(v.lower), format_expr(v.upper), format_expr(v.init)) == \
        ("c", "0", "2", "0")
    assert m.properties[0].name == "p_heads"
    assert format_expr(m.partition.expr) == "(c + 1)"


def test_syntax_error_position_and_expected():
    with pytest.raises(ModelSyntaxError) as exc:
        parse_model("var c : 0..2 init 0;\n[] c=0 -> (c'=1)\n[] c=1 -> (c'=2);\n")
    issue = exc.value.issues[0]
    assert issue.line == 3
    assert issue.expected


def test_several_errors_reported_in_order():
    src = "var a : 0..1 init 0;\nvar b : 0..1 init ;\nvar c : 0 1 init 0;\n"
    with pytest.raises(ModelSyntaxError) as exc:
        parse_model(src)
    lines = [i.line for i in exc.value.issues]
    assert lines == sorted(lines) and {2, 3} <= set(lines)


def test_duplicate_declaration():
    with pytest.raises(ModelSyntaxError, match="duplicate"):
        parse_model("var c : 0..1 init 0;\nvar c : 0..1 init 0;\n")


def test_unknown_identifier():
    with pytest.raises(ModelSyntaxError, match="unknown identifier 'd'"):
        parse_model("var c : 0..1 init 0;\n[] d=0 -> (c'=1);\n")


def test_double_update_in_one_alternative():
    with pytest.raises(ModelSyntaxError, match="more than once|twice"):
        parse_model("var c : 0..1 init 0;\n[] c=0 -> (c'=1) & (c'=0);\n")


def test_out_of_domain_update_parses():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> (c'=3);\n")
    assert len(m.commands) == 1


def test_bad_probability_sum_parses():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> 0.3 : (c'=1) + 0.3 : (c'=2);\n")
    assert len(m.commands[0].alternatives) == 2


def test_rewards_per_alternative_and_command():
    m = parse_model("var c : 0..2 init 0;\n"
                    "[a] c=0 -> 0.5 : (c'=1) {2} + 0.5 : (c'=2) reward 1;\n")
    cmd = m.commands[0]
    assert cmd.label == "a"
    assert format_expr(cmd.alternatives[0].reward) == "2"
    assert cmd.alternatives[1].reward is None
    assert format_expr(cmd.reward) == "1"


def test_constant_override():
    m = parse_model("const int N = 3;\nvar c : 0..N init 0;\n", {"N": 7})
    tm = type_check(m)
    assert tuple(tm.upper) == (7,)
    with pytest.raises(ModelSyntaxError, match="undeclared constant"):
        parse_model("const int N = 3;\nvar c : 0..N init 0;\n", {"M": 1})


def test_property_and_partition_fragments():
    p = parse_property("Rmin=? [F x>2]")
    assert (p.kind, p.direction, p.is_reward) == ("R", "min", True)
    part = parse_partition("x + 1 bound 4")
    assert part.bound is not None and format_expr(part.expr) == "(x + 1)"


def test_range_syntax_does_not_lex_as_real():
    m = parse_model("var c : 0..2 init 0;\n")
    assert format_expr(m.variables[0].upper) == "2"


def test_expression_precedence():
    e = parse_expression("1 + 2 * 3 = 7 & !false | x > 1 ? 1 : 0")
    assert format_expr(e) == "(((((1 + (2 * 3)) = 7) & (!(false))) | (x > 1)) ? 1 : 0)"


# -- printing fixpoint ---------------------------------------------------------------

names = st.sampled_from(["x", "y", "N"])
int_lits = st.integers(-50, 50).map(lambda v: A.IntLit(v))
real_lits = st.floats(-100, 100, allow_nan=False, allow_infinity=False).map(lambda v: A.RealLit(v))
leaves = st.one_of(int_lits, real_lits, st.booleans().map(A.BoolLit), names.map(A.Ident))


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "/", "=", "!=", "<", "<=", ">", ">=", "&", "|"]),
                  children, children).map(lambda t: A.Binary(*t)),
        st.tuples(st.sampled_from(["!", "-"]), children).map(lambda t: A.Unary(*t)),
        st.tuples(st.sampled_from(["min", "max"]), st.lists(children, min_size=1, max_size=3))
        .map(lambda t: A.Call(t[0], tuple(t[1]))),
        st.tuples(st.sampled_from(["floor", "ceil", "abs"]), children)
        .map(lambda t: A.Call(t[0], (t[1],))),
        st.tuples(children, children).map(lambda t: A.Call("mod", t)),
        st.tuples(children, children, children).map(lambda t: A.Cond(*t)),
    )


exprs = st.recursive(leaves, _extend, max_leaves=12)


def _canonical(e):
    # a unary minus applied to a literal is folded by the parser, innermost first
    if isinstance(e, A.Unary):
        inner = _canonical(e.operand)
        if e.op == "-" and isinstance(inner, (A.IntLit, A.RealLit)):
            return type(inner)(-inner.value)
        return A.Unary(e.op, inner)
    if isinstance(e, A.Binary):
        return A.Binary(e.op, _canonical(e.left), _canonical(e.right))
    if isinstance(e, A.Call):
        return A.Call(e.func, tuple(_canonical(a) for a in e.args))
    if isinstance(e, A.Cond):
        return A.Cond(_canonical(e.cond), _canonical(e.then), _canonical(e.other))
    return e


@given(exprs)
@settings(max_examples=300, deadline=None)
def test_expression_print_parse_fixpoint(e):
    once = parse_expression(format_expr(e))
    assert once == _canonical(e)
    assert parse_expression(format_expr(once)) == once


@pytest.mark.parametrize("name", sorted(MODELS))
def test_model_print_parse_fixpoint(name):
    m = parse_model(MODELS[name].text())
    again = parse_model(format_model(m))
    assert again == m
    assert parse_model(format_model(again)) == again


def test_random_model_print_parse_fixpoint():
    from modelgen import random_model
    for seed in range(30):
        m = parse_model(random_model(seed).text)
        assert parse_model(format_model(m)) == m


# -- evaluation ------------------------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(parse_expression("x+1"), {"x": 4}) == 5
    assert evaluate(parse_expression("x=0 & y<2"), {"x": 0, "y": 1}) is True
    assert evaluate(parse_expression("7/2"), {}) == 3.5
    assert evaluate(parse_expression("mod(-3, 5)"), {}) == 2
    assert evaluate(parse_expression("x > 1 ? 10 : 20"), {"x": 0}) == 20


def test_division_by_zero_names_expression():
    with pytest.raises(EvaluationError, match=r"\(x / \(y - 1\)\)"):
        evaluate(parse_expression("x / (y - 1)"), {"x": 1, "y": 1})
    f = compile_expr(parse_expression("x / (y - 1)"), ["x", "y"], {})
    with pytest.raises(EvaluationError, match="division by zero"):
        f((1, 1))
    with pytest.raises(EvaluationError, match="modulo by zero"):
        evaluate(parse_expression("mod(x, 0)"), {"x": 1})


num_exprs = st.recursive(
    st.one_of(st.integers(-20, 20).map(A.IntLit), st.sampled_from(["x", "y"]).map(A.Ident)),
    lambda ch: st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*"]), ch, ch).map(lambda t: A.Binary(*t)),
        st.tuples(st.sampled_from(["min", "max"]), ch, ch).map(lambda t: A.Call(t[0], t[1:])),
        st.tuples(ch, st.integers(1, 9).map(A.IntLit)).map(lambda t: A.Call("mod", t)),
        st.tuples(st.sampled_from(["<", "=", ">="]), ch, ch, ch, ch).map(
            lambda t: A.Cond(A.Binary(t[0], t[1], t[2]), t[3], t[4])),
    ), max_leaves=10)


@given(num_exprs, st.integers(-30, 30), st.integers(-30, 30))
@settings(max_examples=300, deadline=None)
def test_compiled_matches_tree_walker_and_is_pure(e, x, y):
    f = compile_expr(e, ["x", "y"], {})
    want = evaluate(e, {"x": x, "y": y})
    assert f((x, y)) == want
    assert f((x, y)) == want
    assert evaluate(e, {"x": x, "y": y}) == want


# -- type checking --------------------------------------------------------------------

def test_boolean_guard_accepted(coin):
    assert coin.type_of(coin.ast.commands[0].guard) == "bool"


def test_probability_must_be_numeric():
    with pytest.raises(ModelTypeError) as exc:
        load_model("var c : 0..2 init 0;\n[] c=0 -> c=0 : (c'=1) + 0.5 : (c'=2);\n")
    assert exc.value.expected in ("real", "int or real", "numeric") and exc.value.found == "bool"


def test_reward_int_promoted():
    m = load_model("var c : 0..2 init 0;\n[] c=0 -> 1 : (c'=1) {2*c};\n")
    assert m.type_of(m.ast.commands[0].alternatives[0].reward) == "int"


def test_guard_must_be_boolean():
    with pytest.raises(ModelTypeError):
        load_model("var c : 0..2 init 0;\n[] c+1 -> (c'=1);\n")


def test_update_of_int_variable_rejects_real():
    with pytest.raises(ModelTypeError):
        load_model("var c : 0..2 init 0;\n[] c=0 -> (c'=0.5);\n")


def test_partition_must_be_integer():
    with pytest.raises(ModelTypeError):
        load_model("var c : 0..2 init 0;\npartition c / 2 bound 2;\n")


def test_init_outside_bounds():
    with pytest.raises(ModelError):
        load_model("var c : 0..2 init 3;\n")


def test_property_target_boolean():
    m = load_model(COIN)
    with pytest.raises(ModelTypeError):
        select_property(m, "Pmax=? [F c+1]")


def test_inline_property_selection(coin):
    p = select_property(coin, "Pmin=? [F c=1]")
    assert p.direction == "min"
    assert select_property(coin, "p_heads").name == "p_heads"
    assert select_property(coin).name == "p_heads"


@pytest.mark.parametrize("name", sorted(MODELS))
def test_partition_maps_initial_state_to_one(name):
    from diskmdp.semantics import initial_state, partition_of
    m = corpus_model(name)
    assert partition_of(m, initial_state(m)) == 1


def test_partition_override():
    m = with_partition(load_model(COIN), parse_partition("1 bound 1"))
    assert m.partition_fn((2,)) == 1
