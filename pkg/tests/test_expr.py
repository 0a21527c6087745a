import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylgp import expr as ex
from weylgp.parsing import ParseError, parse

NAMES = ("x", "y")


@st.composite
def expressions(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(st.one_of(
            st.sampled_from([ex.var("x"), ex.var("y")]),
            st.integers(-4, 4).map(ex.const),
        ))
    kind = draw(st.sampled_from(["add", "mul", "pow", "sin", "cos", "exp"]))
    a = draw(expressions(depth=depth - 1))
    if kind == "add":
        return ex.add(a, draw(expressions(depth=depth - 1)))
    if kind == "mul":
        return ex.mul(a, draw(expressions(depth=depth - 1)))
    if kind == "pow":
        return ex.power(a, draw(st.integers(0, 3)))
    if kind == "exp":
        return ex.exp(ex.mul(ex.const(Fraction(1, 4)), a))
    return ex.func(kind, a)


def _eval(e, x, y):
    return np.asarray(ex.compile_expr(e, NAMES)(np.asarray(x), np.asarray(y)), dtype=float)


@settings(max_examples=150, deadline=None)
@given(expressions())
def test_print_parse_round_trip(e):
    back = ex.parse_expr(ex.to_string(e), NAMES)
    pts = np.array([0.3, -0.7, 1.1]), np.array([0.5, 0.2, -0.4])
    np.testing.assert_allclose(_eval(back, *pts), _eval(e, *pts), rtol=1e-12, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(expressions(), st.sampled_from(NAMES))
def test_derivative_against_finite_differences(e, name):
    d = ex.diff(e, name)
    x, y = np.array([0.31, -0.52]), np.array([0.27, 0.64])
    h = 1e-6
    if name == "x":
        fd = (_eval(e, x + h, y) - _eval(e, x - h, y)) / (2 * h)
    else:
        fd = (_eval(e, x, y + h) - _eval(e, x, y - h)) / (2 * h)
    exact = _eval(d, x, y)
    scale = max(1.0, float(np.max(np.abs(exact))))
    assert np.max(np.abs(np.broadcast_to(exact, fd.shape) - fd)) <= 1e-5 * scale


@settings(max_examples=80, deadline=None)
@given(expressions(), expressions())
def test_leibniz_rule(a, b):
    lhs = ex.diff(ex.mul(a, b), "x")
    rhs = ex.add(ex.mul(ex.diff(a, "x"), b), ex.mul(a, ex.diff(b, "x")))
    x, y = np.array([0.2, 0.9]), np.array([-0.3, 0.4])
    np.testing.assert_allclose(np.broadcast_to(_eval(lhs, x, y), (2,)), np.broadcast_to(_eval(rhs, x, y), (2,)),
                               rtol=1e-10, atol=1e-10)


def test_simplification_and_constants():
    x = ex.var("x")
    assert ex.add(x, ex.const(0)) == x
    assert ex.mul(x, ex.const(0)) == ex.const(0)
    assert ex.mul(ex.const(1), x) == x
    assert ex.diff(ex.const(3), "x") == ex.const(0)
    assert float(ex.evaluate(ex.parse_expr("pi/2"), {})) == math.pi / 2
    assert ex.free_vars(ex.parse_expr("x*sin(y) + pi")) == {"x", "y"}


def test_non_smooth_detection():
    assert ex.uses_non_smooth(ex.parse_expr("1 - exp(-abs(x))"))
    assert not ex.uses_non_smooth(ex.parse_expr("exp(-x^2)"))


def test_substitute_and_compile_several():
    e = ex.parse_expr("x^2 + y", NAMES)
    s = ex.substitute(e, {"x": ex.var("y")})
    assert ex.free_vars(s) == {"y"}
    f = ex.compile_expr([e, s], NAMES)
    a, b = f(np.array([2.0]), np.array([3.0]))
    assert a[0] == 7.0 and b[0] == 12.0


@pytest.mark.parametrize("text,column", [("x +", 4), ("2*(x", 5), ("x $ y", 3), ("foo(x)", 1), ("q", 1)])
def test_parse_errors_carry_positions(text, column):
    with pytest.raises(ParseError) as info:
        ex.parse_expr(text, NAMES)
    assert info.value.column == column


def test_grammar_precedence():
    assert ex.evaluate(ex.parse_expr("-2^2"), {}) == -4
    # exponents are integer literals, so a tower is rejected
    with pytest.raises(ParseError):
        ex.parse_expr("2^3^2")
    assert ex.evaluate(ex.parse_expr("x^-2"), {"x": 2.0}) == 0.25
    assert ex.evaluate(ex.parse_expr("1/2*4"), {}) == 2
    assert parse("x**2").kind == "pow"
