"""Gaussian processes with symbolic mean/covariance, pushforwards along operator matrices,
and exact-arithmetic-free numeric conditioning.

Covariances are matrices of :class:`~weylgp.expr.Expr` in two variable
blocks: the coordinates ``x1..xd`` and their primed copies ``x1'..xd'``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular

from . import expr as ex
from .diffalg import DiffAlgebraPresentation
from .ore import OperatorMatrix, OrePoly

__all__ = [
    "primed", "se_kernel", "apply_operator", "apply_matrix", "pushforward", "GaussianProcess",
    "DataSet", "Posterior", "posterior", "GridResult", "field_grid", "sample_prior",
    "NumericalError", "Entry",
]

# matrix entries acting on functions: an operator or a multiplication by an expression
Entry = "OrePoly | ex.Expr"


class NumericalError(ArithmeticError):
    pass


def primed(name: str) -> str:
    return name + "'"


def se_kernel(coords: Sequence[str], lengthscale: float = 1.0) -> ex.Expr:
    """``exp(-1/2 * sum (x_a - x_a')^2 / lengthscale^2)``."""
    if not coords:
        raise ValueError("the kernel needs at least one coordinate")
    from fractions import Fraction
    ls = Fraction(lengthscale).limit_denominator(10**12) if not isinstance(lengthscale, Fraction) else lengthscale
    if ls <= 0:
        raise ValueError("lengthscale must be positive")
    terms = [ex.power(ex.sub(ex.var(c), ex.var(primed(c))), 2) for c in coords]
    return ex.exp(ex.mul(ex.const(Fraction(-1, 2) / ls ** 2), ex.add(*terms)))


class _DiffCache:
    """Derivatives of one expression by multi-indices over a fixed variable list."""

    def __init__(self, e: ex.Expr, names: Sequence[str]):
        self.names = list(names)
        self.cache: dict[tuple[int, ...], ex.Expr] = {(0,) * len(self.names): e}

    def get(self, beta: tuple[int, ...]) -> ex.Expr:
        hit = self.cache.get(beta)
        if hit is not None:
            return hit
        j = max(i for i, b in enumerate(beta) if b)
        prev = beta[:j] + (beta[j] - 1,) + beta[j + 1:]
        res = ex.diff(self.get(prev), self.names[j])
        self.cache[beta] = res
        return res


def _side_names(P: DiffAlgebraPresentation, side: str) -> tuple[list[str], str]:
    if side not in ("x", "x'"):
        raise ValueError("side must be 'x' or \"x'\"")
    suffix = "'" if side == "x'" else ""
    return [c + suffix for c in P.coordinates], suffix


def apply_operator(p, e: ex.Expr, presentation: DiffAlgebraPresentation, side: str = "x",
                   _cache: _DiffCache | None = None) -> ex.Expr:
    """Apply a scalar operator (or multiplication by an expression) to ``e``.

    ``f^alpha d^beta`` acts by differentiating ``beta`` times in the chosen
    variable block and multiplying by the realized coefficient.
    """
    names, suffix = _side_names(presentation, side)
    if isinstance(p, ex.Expr):
        if suffix:
            p = ex.substitute(p, {c: ex.var(c + suffix) for c in presentation.coordinates})
        return ex.mul(p, e)
    if not isinstance(p, OrePoly) or p.rank != 1:
        raise TypeError("expected a scalar operator or an expression")
    if p.ring.presentation is not presentation:
        raise ValueError("operator belongs to a different presentation")
    cache = _cache or _DiffCache(e, names)
    terms = []
    for (_, beta), coeff in sorted(p.by_partials().items()):
        terms.append(ex.mul(presentation.realization_of(coeff, suffix) if presentation.r else
                            ex.const(_const_value(coeff)), cache.get(beta)))
    return ex.add(*terms) if terms else ex.const(0)


def _const_value(coeff):
    return sum(coeff.terms.values())


def apply_matrix(B, vector: Sequence[ex.Expr], presentation: DiffAlgebraPresentation,
                 side: str = "x") -> list[ex.Expr]:
    """``B`` applied to a column vector of expressions."""
    rows = _rows(B)
    if rows and len(rows[0]) != len(vector):
        raise ValueError(f"matrix has {len(rows[0])} columns, vector has {len(vector)} entries")
    names, _ = _side_names(presentation, side)
    caches = [_DiffCache(v, names) for v in vector]
    out = []
    for row in rows:
        acc = [apply_operator(b, v, presentation, side, c) for b, v, c in zip(row, vector, caches)
               if not _is_zero_entry(b)]
        out.append(ex.add(*acc) if acc else ex.const(0))
    return out


def _rows(B) -> list[list]:
    if isinstance(B, OperatorMatrix):
        return B.rows
    return [list(r) for r in B]


def _is_zero_entry(b) -> bool:
    if isinstance(b, OrePoly):
        return b.is_zero()
    return isinstance(b, ex.Const) and b.value == 0


@dataclass
class GaussianProcess:
    """``GP(mean, cov)`` over the coordinates; ``cov[i][j]`` is an expression in ``x`` and ``x'``."""

    coords: tuple[str, ...]
    mean: list[ex.Expr]
    cov: list[list[ex.Expr]]
    _compiled: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.coords = tuple(self.coords)
        l = len(self.mean)
        if len(self.cov) != l or any(len(row) != l for row in self.cov):
            raise ValueError("covariance must be an l x l matrix matching the mean")

    @property
    def d(self) -> int:
        return len(self.coords)

    @property
    def ell(self) -> int:
        return len(self.mean)

    @classmethod
    def scalar_se(cls, coords: Sequence[str], lengthscale: float = 1.0) -> "GaussianProcess":
        return cls(tuple(coords), [ex.const(0)], [[se_kernel(coords, lengthscale)]])

    @classmethod
    def independent_se(cls, coords: Sequence[str], ell: int, lengthscale: float = 1.0) -> "GaussianProcess":
        k = se_kernel(coords, lengthscale)
        z = ex.const(0)
        return cls(tuple(coords), [z] * ell, [[k if i == j else z for j in range(ell)] for i in range(ell)])

    def with_mean(self, mean: Sequence[ex.Expr]) -> "GaussianProcess":
        return GaussianProcess(self.coords, list(mean), self.cov)

    # -- numeric evaluation --------------------------------------------------

    def _mean_fn(self) -> Callable:
        fn = self._compiled.get("mean")
        if fn is None:
            fn = ex.compile_expr(self.mean, self.coords)
            self._compiled["mean"] = fn
        return fn

    def _cov_fn(self) -> Callable:
        fn = self._compiled.get("cov")
        if fn is None:
            flat = [e for row in self.cov for e in row]
            fn = ex.compile_expr(flat, list(self.coords) + [primed(c) for c in self.coords])
            self._compiled["cov"] = fn
        return fn

    def mean_at(self, X) -> np.ndarray:
        """Mean at the rows of ``X`` as an ``(n, l)`` array."""
        X = _points(X, self.d)
        vals = self._mean_fn()(*X.T)
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), (X.shape[0],)) for v in vals], axis=1)

    def cov_blocks(self, X, Y) -> np.ndarray:
        """Cross covariance as an ``(n, l, m, l)`` array."""
        X = _points(X, self.d)
        Y = _points(Y, self.d)
        n, m, l = X.shape[0], Y.shape[0], self.ell
        args = [X[:, a][:, None] for a in range(self.d)] + [Y[:, a][None, :] for a in range(self.d)]
        vals = self._cov_fn()(*args)
        out = np.empty((n, l, m, l))
        for i in range(l):
            for j in range(l):
                out[:, i, :, j] = np.broadcast_to(vals[i * l + j], (n, m))
        return out

    def cov_matrix(self, X, Y=None) -> np.ndarray:
        """``(n l) x (m l)`` covariance with row index ``point * l + component``."""
        Y = X if Y is None else Y
        blocks = self.cov_blocks(X, Y)
        n, l, m, _ = blocks.shape
        return blocks.reshape(n * l, m * l)

    def variance_at(self, X) -> np.ndarray:
        """Pointwise variances ``(n, l)`` (diagonal entries of ``k(x, x)``)."""
        X = _points(X, self.d)
        args = [X[:, a] for a in range(self.d)] * 2
        vals = self._cov_fn()(*args)
        l = self.ell
        return np.stack([np.broadcast_to(np.asarray(vals[i * l + i], dtype=float), (X.shape[0],))
                         for i in range(l)], axis=1)


def _points(X, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, d) if d > 1 else X.reshape(-1, 1)
    if X.shape[1] != d:
        raise ValueError(f"points must have {d} coordinates, got {X.shape[1]}")
    return X


def pushforward(B, g: GaussianProcess, presentation: DiffAlgebraPresentation) -> GaussianProcess:
    """``GP(B mu, B k B'^T)``: entry ``(i, j)`` is ``sum_uv B_iu^x B_jv^x' k_uv``."""
    rows = _rows(B)
    if not rows:
        raise ValueError("empty operator matrix")
    if len(rows[0]) != g.ell:
        raise ValueError(f"matrix has {len(rows[0])} columns but the process has {g.ell} outputs")
    if tuple(presentation.coordinates) != g.coords:
        raise ValueError("presentation coordinates differ from the process coordinates")
    mean = apply_matrix(rows, g.mean, presentation, "x")
    l = len(rows)
    # inner[j][u] = sum_v B_jv^{x'} k_uv
    inner = []
    for j in range(l):
        col = [g.cov[u] for u in range(g.ell)]
        inner.append([ex.add(*[apply_operator(b, col[u][v], presentation, "x'")
                               for v, b in enumerate(rows[j]) if not _is_zero_entry(b)] or [ex.const(0)])
                      for u in range(g.ell)])
    cov = [[None] * l for _ in range(l)]
    for i in range(l):
        for j in range(l):
            cov[i][j] = apply_matrix([rows[i]], inner[j], presentation, "x")[0]
    return GaussianProcess(g.coords, mean, cov)


@dataclass
class DataSet:
    """Observations ``value = g(point)[component] + noise``; ``component`` is 0-based."""

    points: np.ndarray
    components: np.ndarray
    values: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.components = np.asarray(self.components, dtype=int).reshape(-1)
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        self.noise = np.broadcast_to(np.asarray(self.noise, dtype=float), self.values.shape).copy()
        n = self.values.shape[0]
        if self.points.shape[0] != n or self.components.shape[0] != n:
            raise ValueError("points, components and values must have the same length")
        if not (np.all(np.isfinite(self.points)) and np.all(np.isfinite(self.values))):
            raise ValueError("data must be finite")
        if np.any(self.noise < 0) or np.any(self.components < 0):
            raise ValueError("noise variances and components must be non-negative")

    def __len__(self):
        return self.values.shape[0]

    @classmethod
    def empty(cls, d: int) -> "DataSet":
        return cls(np.zeros((0, d)), np.zeros(0, dtype=int), np.zeros(0), np.zeros(0))

    @classmethod
    def from_vectors(cls, points, Y, noise=0.0) -> "DataSet":
        """Full vector observations: row ``i`` of ``Y`` is observed at ``points[i]``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        n, l = Y.shape
        return cls(np.repeat(points, l, axis=0), np.tile(np.arange(l), n), Y.reshape(-1),
                   np.broadcast_to(np.asarray(noise, dtype=float), (n * l,)))


def _factor(K: np.ndarray, jitter_rel: float = 1e-10) -> tuple[np.ndarray, bool]:
    """Lower Cholesky factor, retrying once with ``jitter_rel * max diag`` added."""
    c, info = lapack.dpotrf(K, lower=1, clean=1)
    if info == 0:
        return c, False
    scale = float(np.max(np.abs(np.diag(K)))) if K.size else 1.0
    K2 = K + jitter_rel * max(scale, 1e-300) * np.eye(K.shape[0])
    c, info2 = lapack.dpotrf(K2, lower=1, clean=1)
    if info2 == 0:
        return c, True
    lam = float(np.linalg.eigvalsh(K)[0])
    raise NumericalError(f"covariance not positive definite: leading minor {info} fails "
                         f"(smallest eigenvalue {lam:.3e}) even after jitter")


class Posterior:
    """Conditioned process; evaluates mean and covariance at arbitrary points."""

    def __init__(self, prior: GaussianProcess, data: DataSet):
        if data.points.shape[1] != prior.d and len(data):
            raise ValueError("data dimension does not match the process")
        if len(data) and np.max(data.components) >= prior.ell:
            raise ValueError("data component out of range")
        self.prior = prior
        self.data = data
        self.jitter_used = False
        n = len(data)
        if n:
            K = self._k_obs_obs()
            K[np.diag_indices(n)] += data.noise
            self._L, self.jitter_used = _factor(K)
            resid = data.values - self._prior_mean_obs()
            self._alpha = cho_solve((self._L, True), resid)

    def _prior_mean_obs(self) -> np.ndarray:
        m = self.prior.mean_at(self.data.points)
        return m[np.arange(len(self.data)), self.data.components]

    def _k_obs_obs(self) -> np.ndarray:
        blocks = self.prior.cov_blocks(self.data.points, self.data.points)
        c = self.data.components
        idx = np.arange(len(self.data))
        return blocks[idx[:, None], c[:, None], idx[None, :], c[None, :]].copy()

    def _k_query_obs(self, X) -> np.ndarray:
        """``(n, l, N)``: covariance between query outputs and observations."""
        blocks = self.prior.cov_blocks(X, self.data.points)
        idx = np.arange(len(self.data))
        return blocks[:, :, idx, self.data.components]

    def mean(self, X) -> np.ndarray:
        X = _points(X, self.prior.d)
        m = self.prior.mean_at(X)
        if not len(self.data):
            return m
        return m + np.einsum("nlk,k->nl", self._k_query_obs(X), self._alpha)

    def variance(self, X) -> np.ndarray:
        X = _points(X, self.prior.d)
        v = self.prior.variance_at(X)
        if not len(self.data):
            return v
        kq = self._k_query_obs(X)
        n, l, N = kq.shape
        W = solve_triangular(self._L, kq.reshape(n * l, N).T, lower=True)
        return v - np.sum(W * W, axis=0).reshape(n, l)

    def cov(self, X, Y=None) -> np.ndarray:
        """Posterior covariance matrix with row index ``point * l + component``."""
        X = _points(X, self.prior.d)
        Y = X if Y is None else _points(Y, self.prior.d)
        K = self.prior.cov_matrix(X, Y)
        if not len(self.data):
            return K
        l = self.prior.ell
        kx = self._k_query_obs(X).reshape(X.shape[0] * l, -1)
        ky = self._k_query_obs(Y).reshape(Y.shape[0] * l, -1)
        return K - kx @ cho_solve((self._L, True), ky.T)

    def as_process_values(self, X) -> tuple[np.ndarray, np.ndarray]:
        return self.mean(X), np.sqrt(np.maximum(self.variance(X), 0.0))


def posterior(g: GaussianProcess, data: DataSet) -> Posterior:
    return Posterior(g, data)


@dataclass
class GridResult:
    axes: list[np.ndarray]
    points: np.ndarray
    inside: np.ndarray
    mean: np.ndarray
    sd: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)


def field_grid(evaluator: Posterior | GaussianProcess, box: Sequence[tuple[float, float]],
               resolution: int | Sequence[int], region: Callable | None = None,
               threads: int = 1, chunk: int = 512) -> GridResult:
    """Evaluate mean and standard deviation on a row-major grid (last axis fastest).

    Points where ``region`` is false are marked absent (``nan``).
    """
    if isinstance(evaluator, GaussianProcess):
        evaluator = Posterior(evaluator, DataSet.empty(evaluator.d))
    d = evaluator.prior.d
    if len(box) != d:
        raise ValueError("box dimension mismatch")
    res = [resolution] * d if isinstance(resolution, int) else list(resolution)
    if any(r < 2 for r in res):
        raise ValueError("resolution must be at least 2 per axis")
    axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(box, res)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    inside = np.ones(len(pts), dtype=bool) if region is None else np.asarray(region(pts), dtype=bool)
    l = evaluator.prior.ell
    mean = np.full((len(pts), l), np.nan)
    sd = np.full((len(pts), l), np.nan)
    sel = np.nonzero(inside)[0]
    pieces = [sel[i:i + chunk] for i in range(0, len(sel), chunk)]

    def work(idx):
        return idx, evaluator.mean(pts[idx]), np.sqrt(np.maximum(evaluator.variance(pts[idx]), 0.0))

    if threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, pieces))
    else:
        results = [work(p) for p in pieces]
    for idx, m, s in results:
        mean[idx] = m
        sd[idx] = s
    return GridResult(axes, pts, inside, mean, sd)


def sample_prior(g: GaussianProcess | Posterior, points, seed: int = 0, n_samples: int = 1,
                 jitter_rel: float = 1e-10) -> np.ndarray:
    """Reproducible draws of the process at ``points`` as ``(n_samples, n, l)``.

    Singular covariances (zero-variance points) are handled by a symmetric
    eigendecomposition with eigenvalues above ``-jitter_rel * max diag`` clipped to 0.
    """
    if isinstance(g, Posterior):
        prior, post = g.prior, g
    else:
        prior, post = g, None
    X = _points(points, prior.d)
    n, l = X.shape[0], prior.ell
    if post is None:
        K = prior.cov_matrix(X)
        mu = prior.mean_at(X).reshape(-1)
    else:
        K = post.cov(X)
        mu = post.mean(X).reshape(-1)
    K = 0.5 * (K + K.T)
    c, info = lapack.dpotrf(K, lower=1, clean=1)
    if info == 0:
        root = c
    else:
        lam, V = np.linalg.eigh(K)
        tol = jitter_rel * max(float(np.max(np.abs(np.diag(K)))), 1e-300)
        if lam[0] < -tol:
            raise NumericalError(f"covariance is indefinite (smallest eigenvalue {lam[0]:.3e})")
        root = V * np.sqrt(np.clip(lam, 0.0, None))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, n * l))
    return (mu + z @ root.T).reshape(n_samples, n, l)
