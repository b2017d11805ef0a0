import random
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freepick import ncrat
from freepick.ncrat import Add, Const, Inv, Mul, Neg, Var

P = ncrat.parse


def test_precedence_and_associativity():
    assert P("Z1 + Z2*Z3") == Add((Var(1), Mul((Var(2), Var(3)))))
    assert P("Z1 - Z2 - Z3") == Add((Var(1), Neg(Var(2)), Neg(Var(3))))
    assert P("(Z1 + Z2) + Z3") == Add((Add((Var(1), Var(2))), Var(3)))
    assert P("-Z1*Z2") == Mul((Neg(Var(1)), Var(2)))
    assert P("inv(Z1)") == Inv(Var(1))


@pytest.mark.parametrize("text,value", [
    ("2", 2), ("2.5e-1", 0.25), ("3i", 3j), ("i", 1j), ("1+2i", 1 + 2j), ("1 - 2.5i", 1 - 2.5j),
    (".5", 0.5),
])
def test_literals(text, value):
    assert P(text) == Const(complex(value))


def test_greedy_complex_literal():
    assert P("2 + 3i") == Const(2 + 3j)
    assert P("Z1 + 2 + 3i") == Add((Var(1), Const(2 + 3j)))
    assert P("2 + Z1") == Add((Const(2), Var(1)))


@pytest.mark.parametrize("text,fragment", [
    ("Z1 +", "end of input"), ("inv(Z1", "expected ')'"), ("Z1)", "unbalanced"), ("Z0", "Z1"),
    ("Z1 $ Z2", "unknown token"), ("Z1 Z2", "unexpected"), ("", "end of input"), ("x", "unknown token"),
])
def test_syntax_errors_carry_spans(text, fragment):
    with pytest.raises(ncrat.NCSyntaxError, match=re.escape(fragment)) as exc:
        P(text)
    assert 0 <= exc.value.span.start <= exc.value.span.end <= len(text)


def test_spans_point_into_source():
    text = "Z1 + inv(Z2 - 1)"
    e = P(text)
    inv = e.terms[1]
    assert text[inv.span.start:inv.span.end] == "inv(Z2 - 1)"


def test_format_canonical():
    assert ncrat.format(P("Z1+(Z2*Z3)")) == "Z1 + Z2*Z3"
    assert ncrat.format(P("2+3i")) == "(2.0+3.0i)"
    assert ncrat.format(P("(Z1 + Z2)*Z3")) == "(Z1 + Z2)*Z3"


@pytest.mark.parametrize("c", [-1.0, -2j, -1 + 1j])
def test_format_rejects_unliteral_constants(c):
    with pytest.raises(ValueError):
        ncrat.format(Const(complex(c)))


@settings(max_examples=1000)
@given(st.integers(0, 2**32))
def test_round_trip_random_ast(seed):
    e = ncrat.random_expr(random.Random(seed), max_depth=6)
    text = ncrat.format(e)
    assert P(text) == e
    assert ncrat.format(P(text)) == text


@given(st.integers(0, 2**32))
def test_evaluation_respects_format(seed):
    e = ncrat.random_expr(random.Random(seed), max_depth=4)
    rng = np.random.default_rng(seed)
    mats = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(2)]
    try:
        a = ncrat.evaluate(e, mats)
    except ncrat.SingularInverse:
        return
    b = ncrat.evaluate(P(ncrat.format(e)), mats)
    assert np.array_equal(a, b)


def test_evaluate_is_noncommutative():
    x = np.array([[0, 1], [0, 0]], dtype=complex)
    y = x.T.copy()
    assert not np.allclose(ncrat.evaluate(P("Z1*Z2"), [x, y]), ncrat.evaluate(P("Z2*Z1"), [x, y]))
    assert np.allclose(ncrat.evaluate(P("Z1*Z2 - 1"), [x, y]), x @ y - np.eye(2))


def test_evaluate_errors():
    with pytest.raises(ncrat.SingularInverse) as exc:
        ncrat.evaluate(P("inv(Z1 - Z1)"), [np.eye(2)])
    assert exc.value.span == ncrat.SourceSpan(0, 12)
    with pytest.raises(ncrat.UnboundVariable):
        ncrat.evaluate(P("Z3"), [np.eye(1)])


def test_depth():
    assert ncrat.depth(P("Z1")) == 0
    assert ncrat.depth(P("inv(Z1 + Z2*Z1)")) == 3
