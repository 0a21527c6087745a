import math

import numpy as np
import pytest
import sympy as sp

from weylgp import expr as ex
from weylgp.boundary import double_drop
from weylgp.gp import (DataSet, GaussianProcess, NumericalError, apply_operator, field_grid, posterior, primed,
                       pushforward, sample_prior, se_kernel)
from weylgp.ore import OperatorMatrix, OreAlgebra
from weylgp.presets import weyl_presentation

W1 = weyl_presentation(("x",))
W2 = weyl_presentation()


def test_se_kernel_values():
    k = ex.compile_expr(se_kernel(("x", "y"), 2.0), ("x", "y", "x'", "y'"))
    assert float(k(0.0, 0.0, 0.0, 0.0)) == 1.0
    assert math.isclose(float(k(1.0, 2.0, 0.0, 0.0)), math.exp(-0.5 * 5 / 4), rel_tol=1e-15)
    assert primed("x") == "x'"


def test_pushforward_matches_independent_symbolic_derivation():
    """Second route: the same covariance derived with a general-purpose CAS."""
    P = double_drop(2).presentation
    R = OreAlgebra(P)
    f = "(y^2 - s^4)"
    B = OperatorMatrix.parse(R, [[f"dy*{f}^2"], [f"-dx*{f}^2"]])
    g = pushforward(B, GaussianProcess.scalar_se(("x", "y")), P)

    x1, y1, x2, y2 = sp.symbols("x1 y1 x2 y2")
    k = sp.exp(-((x1 - x2) ** 2 + (y1 - y2) ** 2) / 2)
    F1 = (y1 ** 2 - sp.sin(x1) ** 4) ** 2
    F2 = (y2 ** 2 - sp.sin(x2) ** 4) ** 2
    ops1 = [lambda e: sp.diff(F1 * e, y1), lambda e: -sp.diff(F1 * e, x1)]
    ops2 = [lambda e: sp.diff(F2 * e, y2), lambda e: -sp.diff(F2 * e, x2)]
    rng = np.random.default_rng(11)
    X = rng.uniform([0, -1], [math.pi, 1], (30, 2))
    Y = rng.uniform([0, -1], [math.pi, 1], (30, 2))
    K = g.cov_blocks(X, Y)
    idx = np.arange(30)
    for i in range(2):
        for j in range(2):
            ref = sp.lambdify((x1, y1, x2, y2), ops1[i](ops2[j](k)), "numpy")(X[:, 0], X[:, 1], Y[:, 0], Y[:, 1])
            got = K[idx, i, idx, j]
            assert np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_pushforward_divergence_free_kernel_closed_form():
    R = OreAlgebra(W2)
    g = pushforward(OperatorMatrix.parse(R, [["dy"], ["-dx"]]), GaussianProcess.scalar_se(("x", "y")), W2)
    rng = np.random.default_rng(3)
    X, Y = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
    K = g.cov_blocks(X, Y)
    for a in range(5):
        r = X[a] - Y[a]
        k = math.exp(-0.5 * r @ r)
        # grad-grad structure of the curl of an SE potential
        ref = np.array([[1 - r[1] ** 2, r[0] * r[1]], [r[0] * r[1], 1 - r[0] ** 2]]) * k
        np.testing.assert_allclose(K[a, :, a, :], ref, atol=1e-14)


def test_apply_operator_on_primed_side():
    R = OreAlgebra(W1)
    e = ex.parse_expr("x'^3", ("x'",))
    out = apply_operator(R.parse("dx^2"), e, W1, "x'")
    assert float(ex.evaluate(out, {"x'": 2.0})) == 12.0
    with pytest.raises(ValueError):
        apply_operator(R.parse("dx"), e, W1, "z")


def test_regression_from_two_values_matches_closed_form():
    g = GaussianProcess.scalar_se(("x",))
    post = posterior(g, DataSet(np.array([[-2.0], [2.0]]), np.array([0, 0]), np.array([-1.0, 1.0]),
                                np.array([0.01, 0.01])))
    x = np.linspace(-2.5, 2.5, 41)
    E = np.exp
    mean = -.990427971851666 * E(-(x + 2) ** 2 / 2) + .990427971851666 * E(-(x - 2) ** 2 / 2)
    # the printed band is mean +- 2 * variance
    half = 2 - 1.98019823825307 * E(-(x + 2) ** 2) + 0.131541090052936e-2 * E(-x ** 2 - 4) \
        - 1.98019823825307 * E(-(x - 2) ** 2)
    np.testing.assert_allclose(post.mean(x)[:, 0], mean, atol=1e-12)
    np.testing.assert_allclose(2 * post.variance(x)[:, 0], half, atol=1e-12)


def test_regression_with_derivative_data_matches_closed_form():
    R = OreAlgebra(W1)
    g = pushforward(OperatorMatrix.parse(R, [["1"], ["dx"]]), GaussianProcess.scalar_se(("x",)), W1)
    data = DataSet(np.array([[-2.0], [2.0], [-2.0], [2.0]]), np.array([0, 0, 1, 1]),
                   np.array([-1.0, 1.0, 1.0, 1.0]), np.full(4, 0.01))
    post = posterior(g, data)
    x = np.linspace(-2.5, 2.5, 41)
    E = np.exp
    printed = (-.991748666925102 * E(-(x + 2) ** 2 / 2) + .991752149458988 * E(-(x - 2) ** 2 / 2)
               + .996367574180994 * (x + 2) * E(-(x + 2) ** 2 / 2) + .993745428529554 * (x - 2) * E(-(x - 2) ** 2 / 2))
    m = post.mean(x)[:, 0]
    # the exact posterior mean is odd; the printed coefficients are not quite symmetric
    np.testing.assert_allclose(m, -m[::-1], atol=1e-14)
    np.testing.assert_allclose(m, printed, atol=5e-3)
    # the derivative component is the derivative of the value component
    h = 1e-6
    fd = (post.mean(x + h)[:, 0] - post.mean(x - h)[:, 0]) / (2 * h)
    np.testing.assert_allclose(post.mean(x)[:, 1], fd, atol=1e-7)


def test_posterior_covariance_is_symmetric_and_psd():
    R = OreAlgebra(W2)
    g = pushforward(OperatorMatrix.parse(R, [["dy"], ["-dx"]]), GaussianProcess.scalar_se(("x", "y")), W2)
    post = posterior(g, DataSet.from_vectors([[0.0, 0.0], [1.0, 0.5]], [[1.0, 0.0], [0.0, -1.0]], 0.01))
    X = np.random.default_rng(0).normal(size=(6, 2))
    C = post.cov(X)
    np.testing.assert_allclose(C, C.T, atol=1e-13)
    assert np.linalg.eigvalsh(C).min() > -1e-10
    np.testing.assert_allclose(np.diag(C).reshape(6, 2), post.variance(X), atol=1e-12)


def test_singular_covariance_uses_jitter():
    g = GaussianProcess.scalar_se(("x",))
    post = posterior(g, DataSet(np.array([[0.0], [0.0]]), np.array([0, 0]), np.array([1.0, 1.0]), np.zeros(2)))
    assert post.jitter_used
    assert abs(post.mean(np.array([[0.0]]))[0, 0] - 1.0) < 1e-6


def test_indefinite_covariance_raises():
    k = se_kernel(("x",))
    g = GaussianProcess(("x",), [ex.const(0)], [[ex.neg(k)]])
    with pytest.raises(NumericalError):
        posterior(g, DataSet(np.array([[0.0], [1.0]]), np.array([0, 0]), np.array([1.0, 1.0]), np.zeros(2)))


def test_sampling_is_reproducible_and_has_the_right_covariance():
    g = GaussianProcess.scalar_se(("x",))
    X = np.array([[0.0], [0.5], [2.0]])
    a = sample_prior(g, X, seed=42, n_samples=4000)
    b = sample_prior(g, X, seed=42, n_samples=4000)
    assert a.shape == (4000, 3, 1)
    assert np.array_equal(a, b)
    emp = np.cov(a[:, :, 0].T)
    assert np.max(np.abs(emp - g.cov_matrix(X))) < 0.08


def test_sampling_with_zero_variance_points():
    b = double_drop(2)
    R = OreAlgebra(b.presentation)
    f = "(y^2 - s^4)"
    g = pushforward(OperatorMatrix.parse(R, [[f"dy*{f}^2"], [f"-dx*{f}^2"]]),
                    GaussianProcess.scalar_se(("x", "y")), b.presentation)
    X = np.array([[0.0, 0.0], [math.pi / 2, 1.0], [math.pi / 2, 0.0]])
    s = sample_prior(g, X, seed=1, n_samples=5)
    assert np.max(np.abs(s[:, :2])) < 1e-12
    assert np.max(np.abs(s[:, 2])) > 0


def test_field_grid_region_and_threads():
    g = GaussianProcess.independent_se(("x", "y"), 2)
    post = posterior(g, DataSet.from_vectors([[0.0, 0.0]], [[1.0, 2.0]], 0.1))

    def disk(p):
        return p[:, 0] ** 2 + p[:, 1] ** 2 <= 1

    a = field_grid(post, [(-1, 1), (-1, 1)], (9, 7), disk)
    b = field_grid(post, [(-1, 1), (-1, 1)], (9, 7), disk, threads=3, chunk=5)
    assert a.shape == (9, 7)
    assert np.all(np.isnan(a.mean[~a.inside]))
    assert np.all(np.isfinite(a.mean[a.inside]))
    np.testing.assert_array_equal(np.nan_to_num(a.mean, nan=7.0), np.nan_to_num(b.mean, nan=7.0))
    # last axis varies fastest
    assert a.points[1, 1] > a.points[0, 1] and a.points[1, 0] == a.points[0, 0]


def test_dataset_validation():
    with pytest.raises(ValueError):
        DataSet(np.zeros((2, 1)), np.array([0]), np.zeros(2), np.zeros(2))
    g = GaussianProcess.scalar_se(("x",))
    with pytest.raises(ValueError):
        posterior(g, DataSet(np.zeros((1, 1)), np.array([1]), np.zeros(1), np.zeros(1)))


def test_pushforward_checks_coordinates():
    R = OreAlgebra(W2)
    with pytest.raises(ValueError):
        pushforward(OperatorMatrix.parse(R, [["dx"]]), GaussianProcess.scalar_se(("u", "v")), W2)
