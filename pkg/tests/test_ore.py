import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylgp import expr as ex
from weylgp.diffalg import derive
from weylgp.gp import apply_operator
from weylgp.orderings import degrevlex
from weylgp.ore import (OperatorMatrix, OreAlgebra, assumption_violations, check_assumption, format_poly,
                        involution, parse_operator)
from weylgp.parsing import ParseError
from weylgp.presets import (double_drop_presentation, gaussian_bump_presentation, polynomial_presentation,
                            weyl_presentation)

from randgen import random_poly

BUMP = OreAlgebra(gaussian_bump_presentation())
DROP = OreAlgebra(double_drop_presentation())
WEYL = OreAlgebra(polynomial_presentation())

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
rings = st.sampled_from([BUMP, DROP, WEYL])


@settings(max_examples=60, deadline=None)
@given(rings, seeds)
def test_ring_axioms(R, seed):
    rng = random.Random(seed)
    p, q, s = (random_poly(R, rng, 3, 3) for _ in range(3))
    assert (p * q) * s == p * (q * s)
    assert p * (q + s) == p * q + p * s
    assert (p + q) * s == p * s + q * s
    assert p - p == R.zero()
    assert R.one() * p == p


@settings(max_examples=60, deadline=None)
@given(rings, seeds, st.integers(0, 1))
def test_commutation_rule(R, seed, j):
    """d_j a = a d_j + delta_j(a) for every coefficient a."""
    rng = random.Random(seed)
    a = random_poly(R, rng, 3, 4)
    a = R.from_commpoly(a.coefficient_poly((0,) * R.d))
    lhs = R.partial(j) * a
    rhs = a * R.partial(j) + R.from_commpoly(derive(R.presentation, a.coefficient_poly((0,) * R.d), j))
    assert lhs == rhs


def test_bump_commutator():
    assert BUMP.parse("dx") * BUMP.parse("E") == BUMP.parse("E*dx + 2*x*E")
    assert BUMP.parse("dy^2") * BUMP.parse("E") == BUMP.parse("E*dy^2 + 4*y*E*dy + 2*E + 4*y^2*E")


def test_parse_print_round_trip():
    rng = random.Random(0)
    for i in range(200):
        R = (BUMP, DROP, WEYL)[i % 3]
        p = random_poly(R, rng, 4, 5, coeff_range=9)
        if i % 4 == 0:
            p = p.scale(Fraction(1, rng.randint(2, 7)))
        text = format_poly(p)
        assert parse_operator(R, text) == p
        assert parse_operator(R, format_poly(p, degrevlex())) == p


def test_composition_semantics():
    assert WEYL.parse("dx*x") == WEYL.parse("x*dx + 1")
    assert WEYL.parse("(x + 1)^2") == WEYL.parse("x^2 + 2*x + 1")
    assert WEYL.parse("1/2*dx - 3/4") == WEYL.parse("dx/2 - 3/4")


@pytest.mark.parametrize("text,fragment,column", [
    ("x + q", "unknown generator q", 5),
    ("x*dq", "unknown derivation dq", 3),
    ("x +* 2", "unexpected", 4),
    ("sin(x)", "function call", 1),
    ("dx/x", "division only", 4),
    ("x^-1", "", 2),
])
def test_parse_errors(text, fragment, column):
    with pytest.raises(ParseError) as info:
        WEYL.parse(text)
    assert fragment in str(info.value)
    assert info.value.line == 1
    assert info.value.column >= 1
    if fragment:
        assert info.value.column == column


def test_parse_error_position_on_second_line():
    with pytest.raises(ParseError) as info:
        WEYL.parse("x +\n  zz")
    assert (info.value.line, info.value.column) == (2, 3)


@settings(max_examples=40, deadline=None)
@given(rings, seeds)
def test_involution_is_anti_automorphism(R, seed):
    rng = random.Random(seed)
    p, q = random_poly(R, rng, 3, 3), random_poly(R, rng, 3, 3)
    assert involution(involution(p)) == p
    assert involution(p * q) == involution(q) * involution(p)


def test_involution_values():
    assert involution(WEYL.parse("x*dx")) == WEYL.parse("-x*dx - 1")
    assert involution(WEYL.parse("dx^2")) == WEYL.parse("dx^2")


def test_products_act_as_compositions():
    """Numeric cross-check: (p q) applied to a function equals p applied to q applied to it."""
    P = BUMP.presentation
    rng = random.Random(5)
    e = ex.parse_expr("sin(x)*cos(2*y) + x^3*y", ("x", "y"))
    pts = np.array([[0.3, -0.2], [1.1, 0.4], [-0.7, 0.9]])
    for _ in range(10):
        p, q = random_poly(BUMP, rng, 2, 3), random_poly(BUMP, rng, 2, 3)
        lhs = ex.compile_expr(apply_operator(p * q, e, P), ("x", "y"))(*pts.T)
        rhs = ex.compile_expr(apply_operator(p, apply_operator(q, e, P), P), ("x", "y"))(*pts.T)
        np.testing.assert_allclose(np.broadcast_to(lhs, (3,)), np.broadcast_to(rhs, (3,)), rtol=1e-10, atol=1e-10)


def test_assumption_check():
    assert check_assumption(BUMP.presentation, degrevlex())
    # weights over (x, y, E, dx, dy): a heavy x breaks lm(dx E) = E dx
    w = [5, 1, 1, 1, 1]
    assert assumption_violations(BUMP.presentation, degrevlex(w)) == [(2, 0)]


def test_matrix_algebra():
    A = OperatorMatrix.parse(WEYL, [["dx", "dy"]])
    B = OperatorMatrix.parse(WEYL, [["dy"], ["-dx"]])
    assert (A @ B).is_zero()
    assert (B @ A).shape == (2, 2)
    assert A.transpose().shape == (2, 1)
    I = OperatorMatrix.identity(WEYL, 2)
    assert (A @ I).to_strings() == A.to_strings()
    assert A.hstack(A).shape == (1, 4)
    assert A.vstack(A).shape == (2, 2)
    with pytest.raises(ValueError):
        A @ A


def test_vectors_and_components():
    v = WEYL.vector([WEYL.parse("dx"), WEYL.parse("x")])
    assert v.rank == 2
    assert v.component(1) == WEYL.parse("x")
    assert [str(c) for c in v.components()] == ["dx", "x"]
    assert v.embed(3, 1).slice(1, 3) == v
    with pytest.raises(ValueError):
        v * v


def test_constant_coefficients_have_no_generators():
    W = OreAlgebra(weyl_presentation())
    assert W.r == 0
    assert W.parse("dx*dy") == W.parse("dy*dx")
    with pytest.raises(ParseError):
        W.parse("x*dx")
