import random

import pytest

from weylgp.boundary import build_boundary, BoundarySpec, double_drop
from weylgp.ore import OperatorMatrix, OreAlgebra
from weylgp.presets import polynomial_presentation, weyl_presentation
from weylgp.syzygy import (involution, intersect_parametrizations, left_kernel, parametrize, right_kernel,
                           row_module_basis, rows_in_row_module, same_column_module, same_row_module)

from randgen import random_poly

W2 = OreAlgebra(weyl_presentation())
W3 = OreAlgebra(weyl_presentation(("x", "y", "z")))
A2 = OreAlgebra(polynomial_presentation())


def M(R, rows):
    return OperatorMatrix.parse(R, rows)


def test_left_kernel_annihilates_and_generates():
    A = M(A2, [["x*dx"], ["dy"]])
    K = left_kernel(A)
    assert (K @ A).is_zero()
    G = row_module_basis(K)
    rng = random.Random(4)
    syz = A2.vector([A2.parse("dy"), A2.parse("-x*dx")])
    assert G.is_member(syz)
    for _ in range(10):
        c = random_poly(A2, rng, 2, 3)
        assert G.is_member(c * syz)


def test_right_kernel_of_divergence_is_curl():
    A = M(W3, [["dx", "dy", "dz"]])
    B = right_kernel(A)
    assert (A @ B).is_zero()
    curl = M(W3, [["0", "-dz", "dy"], ["dz", "0", "-dx"], ["-dy", "dx", "0"]])
    assert same_column_module(B, curl)


def test_right_kernel_of_gradient_is_zero():
    A = M(W2, [["dx"], ["dy"]])
    B = right_kernel(A)
    assert B.ncols == 0 or B.is_zero()


def test_involution_of_matrices():
    A = M(A2, [["x*dx", "dy"], ["1", "x"]])
    assert involution(involution(A)).to_strings() == A.to_strings()
    assert involution(A).shape == (2, 2)


def test_degenerate_shapes():
    empty = OperatorMatrix(W2, [], 0)
    assert left_kernel(empty).shape == (0, 0)
    wide = OperatorMatrix(W2, [[], []], 0)
    assert left_kernel(wide).shape == (2, 2)


def test_parametrize_controllable_and_not():
    res = parametrize(M(W2, [["dx", "dy"]]))
    assert res.parametrizable
    assert all(c.verify(res.A) for c in res.certificates)
    res = parametrize(M(W2, [["dx"]]))
    assert not res.parametrizable
    assert res.A_prime.to_strings() == [["1"]]
    d = res.to_dict()
    assert d["parametrizable"] is False


def test_membership_certificates_on_variable_coefficients():
    A = M(A2, [["x*dx + y*dy - 2"], ["dx^2 + dy^2"]])
    rows = M(A2, [["dx*(x*dx + y*dy - 2) - x*(dx^2 + dy^2)"], ["x"]])
    certs = rows_in_row_module(rows, A)
    assert certs[0].member and certs[0].verify(A)
    assert not certs[1].member
    assert not certs[1].remainder.is_zero()


def test_same_row_module():
    A = M(W2, [["dx", "0"], ["0", "dy"]])
    B = M(W2, [["dx", "dy"], ["dx", "0"]])
    assert same_row_module(A, B)
    assert not same_row_module(A, M(W2, [["dx", "dy"]]))


def test_intersection_with_box_boundary():
    b = build_boundary(BoundarySpec("dirichlet-box-poly", 2, ell=2))
    R = OreAlgebra(b.presentation)
    B1 = M(R, [["dy"], ["-dx"]])
    res = intersect_parametrizations(B1, b.matrix)
    assert (B1 @ res.C1 + b.matrix @ res.C2).is_zero()
    assert (M(R, [["dx", "dy"]]) @ res.P).is_zero()


def test_intersection_double_drop_exact():
    b = double_drop(2)
    R = OreAlgebra(b.presentation)
    res = intersect_parametrizations(M(R, [["dy"], ["-dx"]]), b.matrix)
    assert res.C1.to_strings() == [["s^8 - 2*y^2*s^4 + y^4"]]
    assert (res.P - M(R, [["dy*(y^2 - s^4)^2"], ["-dx*(y^2 - s^4)^2"]])).is_zero()


def test_intersection_rejects_mismatched_rows():
    with pytest.raises(ValueError):
        intersect_parametrizations(M(W2, [["dy"], ["-dx"]]), M(W2, [["1"]]))
