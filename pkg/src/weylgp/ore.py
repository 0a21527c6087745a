"""Exact arithmetic in ``R = K<d_1..d_d>`` and in free modules ``R^{1 x q}``.

Elements are stored in the unique normal form ``sum c_m m`` with
``m = f^alpha d^beta e_k``; see :mod:`weylgp.orderings` for the flat monomial
layout.  Coefficients are Python ``int`` or :class:`fractions.Fraction`.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence

from .diffalg import CommPoly, DiffAlgebraPresentation
from .orderings import MonomialOrdering, top
from .parsing import Node, ParseError, integer_exponent, parse

__all__ = [
    "OreAlgebra", "OrePoly", "OperatorMatrix", "check_assumption", "leading_term",
    "MultiplyStats",
]

Monomial = tuple[int, ...]


class MultiplyStats:
    """Counts applications of the rewrite ``d_i a -> a d_i + delta_i(a)``."""

    def __init__(self):
        self.steps = 0


class OreAlgebra:
    """The ring of differential operators over a presentation."""

    def __init__(self, presentation: DiffAlgebraPresentation):
        self.presentation = presentation
        self.r = presentation.r
        self.d = presentation.d
        self.names = tuple(presentation.generator_names)
        self.partial_names = tuple(presentation.derivation_names)
        self._symbols = {n: ("f", i) for i, n in enumerate(self.names)}
        self._symbols.update({n: ("d", j) for j, n in enumerate(self.partial_names)})

    def __eq__(self, other):
        return isinstance(other, OreAlgebra) and other.presentation is self.presentation

    def __hash__(self):
        return id(self.presentation)

    # -- constructors --------------------------------------------------------

    def monomial(self, alpha: Sequence[int] = (), beta: Sequence[int] = (), k: int = 0) -> Monomial:
        alpha = tuple(alpha) or (0,) * self.r
        beta = tuple(beta) or (0,) * self.d
        if len(alpha) != self.r or len(beta) != self.d:
            raise ValueError("exponent lengths do not match the presentation")
        return (k,) + beta + alpha

    def zero(self, rank: int = 1) -> "OrePoly":
        return OrePoly(self, {}, rank)

    def one(self) -> "OrePoly":
        return OrePoly(self, {(0,) * (1 + self.r + self.d): 1}, 1)

    def const(self, c, rank: int = 1, k: int = 0) -> "OrePoly":
        return OrePoly(self, {(k,) + (0,) * (self.r + self.d): c}, rank)

    def gen(self, i: int) -> "OrePoly":
        alpha = [0] * self.r
        alpha[i] = 1
        return OrePoly(self, {self.monomial(alpha): 1}, 1)

    def partial(self, j: int) -> "OrePoly":
        beta = [0] * self.d
        beta[j] = 1
        return OrePoly(self, {self.monomial(beta=beta): 1}, 1)

    def from_commpoly(self, p: CommPoly) -> "OrePoly":
        zb = (0,) * self.d
        return OrePoly(self, {(0,) + zb + a: c for a, c in p.terms.items()}, 1)

    def unit_vector(self, k: int, rank: int) -> "OrePoly":
        return OrePoly(self, {(k,) + (0,) * (self.r + self.d): 1}, rank)

    def vector(self, entries: Sequence["OrePoly"]) -> "OrePoly":
        """Assemble a row vector from scalar entries."""
        q = len(entries)
        terms: dict[Monomial, object] = {}
        for k, e in enumerate(entries):
            if e.rank != 1:
                raise ValueError("vector entries must be scalars")
            for m, c in e.terms.items():
                terms[(k,) + m[1:]] = c
        return OrePoly(self, terms, q)

    def parse(self, text: str) -> "OrePoly":
        return parse_operator(self, text)

    # -- multiplication core -------------------------------------------------

    def left_mul_partial(self, terms: Mapping[Monomial, object], j: int,
                         stats: MultiplyStats | None = None) -> dict[Monomial, object]:
        """``d_j * p``: one rewrite step for every term of ``p``."""
        pres = self.presentation
        d = self.d
        out: dict[Monomial, object] = {}
        pos = 1 + j
        for m, c in terms.items():
            shifted = m[:pos] + (m[pos] + 1,) + m[pos + 1:]
            out[shifted] = out.get(shifted, 0) + c
            alpha = m[1 + d:]
            if any(alpha):
                if stats is not None:
                    stats.steps += 1
                head = m[:1 + d]
                for a2, v in pres.derive_monomial(alpha, j).items():
                    m2 = head + a2
                    out[m2] = out.get(m2, 0) + c * v
        return {m: c for m, c in out.items() if c}

    def left_mul_terms(self, p_terms: Mapping[Monomial, object], q_terms: Mapping[Monomial, object],
                       stats: MultiplyStats | None = None) -> dict[Monomial, object]:
        """Product of a scalar ``p`` with ``q`` (scalar or module element)."""
        d = self.d
        cache: dict[tuple[int, ...], dict] = {(0,) * d: dict(q_terms)}

        def partial_power(beta: tuple[int, ...]) -> dict:
            hit = cache.get(beta)
            if hit is not None:
                return hit
            # peel one partial off the last nonzero position
            j = max(i for i, b in enumerate(beta) if b)
            prev = beta[:j] + (beta[j] - 1,) + beta[j + 1:]
            res = self.left_mul_partial(partial_power(prev), j, stats)
            cache[beta] = res
            return res

        out: dict[Monomial, object] = {}
        for m, c in p_terms.items():
            beta = m[1:1 + d]
            alpha = m[1 + d:]
            for m2, c2 in partial_power(beta).items():
                if any(alpha):
                    m3 = m2[:1 + d] + tuple(x + y for x, y in zip(m2[1 + d:], alpha))
                else:
                    m3 = m2
                out[m3] = out.get(m3, 0) + c * c2
        return {m: c for m, c in out.items() if c}


class OrePoly:
    """Element of ``R^{1 x rank}`` (``rank == 1`` for ring elements).

    Treat instances as immutable.
    """

    __slots__ = ("ring", "terms", "rank", "_hash")

    def __init__(self, ring: OreAlgebra, terms: Mapping[Monomial, object], rank: int = 1):
        self.ring = ring
        self.rank = rank
        n = 1 + ring.r + ring.d
        clean = {}
        for m, c in terms.items():
            if not c:
                continue
            if len(m) != n or not 0 <= m[0] < rank:
                raise ValueError(f"monomial {m} does not fit rank {rank} over (r={ring.r}, d={ring.d})")
            if isinstance(c, Fraction) and c.denominator == 1:
                c = c.numerator
            clean[m] = c
        self.terms = clean
        self._hash = None

    # -- basic protocol ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ring.const(other, self.rank)
        return (isinstance(other, OrePoly) and other.ring == self.ring and other.rank == self.rank
                and other.terms == self.terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.rank, frozenset(self.terms.items())))
        return self._hash

    def _check(self, other: "OrePoly"):
        if not isinstance(other, OrePoly):
            raise TypeError(f"expected OrePoly, got {type(other).__name__}")
        if other.ring != self.ring:
            raise ValueError("presentation mismatch")

    def _lift(self, other) -> "OrePoly":
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other, 1)
        self._check(other)
        return other

    def __add__(self, other) -> "OrePoly":
        other = self._lift(other)
        if other.rank != self.rank:
            raise ValueError(f"rank mismatch {self.rank} != {other.rank}")
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return OrePoly(self.ring, out, self.rank)

    __radd__ = __add__

    def __neg__(self) -> "OrePoly":
        return OrePoly(self.ring, {m: -c for m, c in self.terms.items()}, self.rank)

    def __sub__(self, other) -> "OrePoly":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "OrePoly":
        return self._lift(other) - self

    def scale(self, c) -> "OrePoly":
        return OrePoly(self.ring, {m: c * v for m, v in self.terms.items()}, self.rank)

    def __mul__(self, other) -> "OrePoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check(other)
        if self.rank != 1:
            raise ValueError("only scalars can multiply from the left")
        return OrePoly(self.ring, self.ring.left_mul_terms(self.terms, other.terms), other.rank)

    def __rmul__(self, other) -> "OrePoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int) -> "OrePoly":
        out = self.ring.one()
        for _ in range(n):
            out = out * self
        return out

    def multiply(self, other: "OrePoly", stats: MultiplyStats | None = None) -> "OrePoly":
        self._check(other)
        return OrePoly(self.ring, self.ring.left_mul_terms(self.terms, other.terms, stats), other.rank)

    # -- structure -----------------------------------------------------------

    def component(self, k: int) -> "OrePoly":
        return OrePoly(self.ring, {(0,) + m[1:]: c for m, c in self.terms.items() if m[0] == k}, 1)

    def components(self) -> list["OrePoly"]:
        buckets: list[dict] = [{} for _ in range(self.rank)]
        for m, c in self.terms.items():
            buckets[m[0]][(0,) + m[1:]] = c
        return [OrePoly(self.ring, b, 1) for b in buckets]

    def embed(self, rank: int, offset: int = 0) -> "OrePoly":
        """Place this vector into ``R^{1 x rank}`` starting at component ``offset``."""
        if offset + self.rank > rank:
            raise ValueError("embedding does not fit")
        return OrePoly(self.ring, {(m[0] + offset,) + m[1:]: c for m, c in self.terms.items()}, rank)

    def slice(self, start: int, stop: int) -> "OrePoly":
        return OrePoly(self.ring, {(m[0] - start,) + m[1:]: c for m, c in self.terms.items()
                                   if start <= m[0] < stop}, stop - start)

    def partial_degree(self) -> int:
        d = self.ring.d
        return max((sum(m[1:1 + d]) for m in self.terms), default=-1)

    def generator_degree(self) -> int:
        d = self.ring.d
        return max((sum(m[1 + d:]) for m in self.terms), default=-1)

    def total_degree(self) -> int:
        return max((sum(m[1:]) for m in self.terms), default=-1)

    def coefficient_poly(self, beta: Sequence[int], k: int = 0) -> CommPoly:
        """The coefficient in ``K`` of ``d^beta e_k``."""
        beta = tuple(beta)
        d = self.ring.d
        return CommPoly(self.ring.r, {m[1 + d:]: c for m, c in self.terms.items()
                                      if m[0] == k and m[1:1 + d] == beta})

    def by_partials(self) -> dict[tuple[int, tuple[int, ...]], CommPoly]:
        """Group terms by ``(component, beta)`` into coefficient polynomials."""
        d = self.ring.d
        out: dict[tuple[int, tuple[int, ...]], dict] = {}
        for m, c in self.terms.items():
            out.setdefault((m[0], m[1:1 + d]), {})[m[1 + d:]] = c
        return {key: CommPoly(self.ring.r, t) for key, t in out.items()}

    def leading_term(self, order: MonomialOrdering) -> tuple[Monomial, object]:
        return leading_term(self, order)

    def primitive(self) -> "OrePoly":
        """Integer multiple with coprime coefficients and positive leading coefficient (content stripped).

        The sign is fixed by the lexicographically largest monomial so that the
        result does not depend on an ordering.
        """
        if not self.terms:
            return self
        den = 1
        for c in self.terms.values():
            if isinstance(c, Fraction):
                den = lcm(den, c.denominator)
        ints = {m: int(c * den) for m, c in self.terms.items()}
        g = 0
        for c in ints.values():
            g = gcd(g, c)
        top_m = max(ints)
        if ints[top_m] < 0:
            g = -g
        return OrePoly(self.ring, {m: c // g for m, c in ints.items()}, self.rank)

    def to_string(self) -> str:
        return format_poly(self)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"OrePoly({self.to_string()!r})"


def leading_term(p: OrePoly, order: MonomialOrdering) -> tuple[Monomial, object]:
    """Greatest monomial of ``p`` under ``order`` together with its coefficient."""
    if not p.terms:
        raise ValueError("zero polynomial has no leading term")
    o = order if (order.is_module or p.rank == 1) else top(order)
    key = o.bind(p.ring.r, p.ring.d)
    m = max(p.terms, key=key)
    return m, p.terms[m]


def check_assumption(P: DiffAlgebraPresentation, order: MonomialOrdering) -> bool:
    """True iff ``lm(d_j f_i) = f_i d_j`` for all ``i, j``, decided by direct comparison."""
    return not assumption_violations(P, order)


def assumption_violations(P: DiffAlgebraPresentation, order: MonomialOrdering) -> list[tuple[int, int]]:
    """All 0-based pairs ``(i, j)`` for which the leading monomial of ``d_j f_i`` is not ``f_i d_j``."""
    r, d = P.r, P.d
    bad = []
    for base in order.scalar_bases():
        key = base.bind(r, d)
        for i in range(r):
            for j in range(d):
                beta = [0] * d
                beta[j] = 1
                alpha = [0] * r
                alpha[i] = 1
                target = key((0,) + tuple(beta) + tuple(alpha))
                for a in P.table[i][j].terms:
                    if key((0,) + (0,) * d + a) >= target:
                        if (i, j) not in bad:
                            bad.append((i, j))
                        break
    return bad


# -- matrices --------------------------------------------------------------

class OperatorMatrix:
    """Rectangular matrix of scalar operators over one presentation."""

    def __init__(self, ring: OreAlgebra, rows: Sequence[Sequence[OrePoly]], ncols: int | None = None):
        self.ring = ring
        self.rows = [list(r) for r in rows]
        if ncols is None:
            if not self.rows:
                raise ValueError("column count required for a matrix without rows")
            ncols = len(self.rows[0])
        self.ncols = ncols
        for row in self.rows:
            if len(row) != ncols:
                raise ValueError("matrix is not rectangular")
            for e in row:
                if not isinstance(e, OrePoly) or e.ring != ring or e.rank != 1:
                    raise ValueError("matrix entries must be scalar operators over the same presentation")

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return (isinstance(other, OperatorMatrix) and self.shape == other.shape
                and all(a == b for ra, rb in zip(self.rows, other.rows) for a, b in zip(ra, rb)))

    @classmethod
    def zeros(cls, ring: OreAlgebra, nrows: int, ncols: int) -> "OperatorMatrix":
        return cls(ring, [[ring.zero() for _ in range(ncols)] for _ in range(nrows)], ncols)

    @classmethod
    def identity(cls, ring: OreAlgebra, n: int) -> "OperatorMatrix":
        return cls(ring, [[ring.one() if i == j else ring.zero() for j in range(n)] for i in range(n)], n)

    @classmethod
    def diagonal(cls, ring: OreAlgebra, entries: Sequence[OrePoly]) -> "OperatorMatrix":
        n = len(entries)
        return cls(ring, [[entries[i] if i == j else ring.zero() for j in range(n)] for i in range(n)], n)

    @classmethod
    def from_vectors(cls, ring: OreAlgebra, vectors: Sequence[OrePoly], ncols: int) -> "OperatorMatrix":
        return cls(ring, [v.components() for v in vectors], ncols)

    @classmethod
    def parse(cls, ring: OreAlgebra, rows: Sequence[Sequence[str]], ncols: int | None = None) -> "OperatorMatrix":
        return cls(ring, [[parse_operator(ring, str(s)) for s in row] for row in rows], ncols)

    def row_vector(self, i: int) -> OrePoly:
        return self.ring.vector(self.rows[i]) if self.ncols else self.ring.zero(0)

    def row_vectors(self) -> list[OrePoly]:
        return [self.row_vector(i) for i in range(self.nrows)]

    def column(self, j: int) -> list[OrePoly]:
        return [row[j] for row in self.rows]

    def transpose(self) -> "OperatorMatrix":
        return OperatorMatrix(self.ring, [self.column(j) for j in range(self.ncols)], self.nrows)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return OperatorMatrix(self.ring, [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)],
                              self.ncols)

    def __neg__(self):
        return OperatorMatrix(self.ring, [[-a for a in row] for row in self.rows], self.ncols)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        ring = self.ring
        rows = []
        for row in self.rows:
            out = []
            for j in range(other.ncols):
                acc: dict = {}
                for a, rb in zip(row, other.rows):
                    if a.terms and rb[j].terms:
                        for m, c in ring.left_mul_terms(a.terms, rb[j].terms).items():
                            acc[m] = acc.get(m, 0) + c
                out.append(OrePoly(ring, acc, 1))
            rows.append(out)
        return OperatorMatrix(ring, rows, other.ncols)

    def left_multiply(self, p: OrePoly) -> "OperatorMatrix":
        return OperatorMatrix(self.ring, [[p * e for e in row] for row in self.rows], self.ncols)

    def hstack(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.nrows != other.nrows:
            raise ValueError("row counts differ")
        return OperatorMatrix(self.ring, [a + b for a, b in zip(self.rows, other.rows)], self.ncols + other.ncols)

    def vstack(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.ncols != other.ncols:
            raise ValueError("column counts differ")
        return OperatorMatrix(self.ring, self.rows + other.rows, self.ncols)

    def submatrix(self, rows: slice | Sequence[int] = slice(None), cols: slice | Sequence[int] = slice(None)):
        ri = range(self.nrows)[rows] if isinstance(rows, slice) else rows
        ci = range(self.ncols)[cols] if isinstance(cols, slice) else cols
        return OperatorMatrix(self.ring, [[self.rows[i][j] for j in ci] for i in ri], len(ci))

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.rows for e in row)

    def to_strings(self) -> list[list[str]]:
        return [[format_poly(e) for e in row] for row in self.rows]

    def __repr__(self):
        return f"OperatorMatrix({self.to_strings()!r}, shape={self.shape})"


# -- printing and parsing ----------------------------------------------------

def _fmt_coeff(c) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_monomial(ring: OreAlgebra, m: Monomial) -> str:
    d = ring.d
    parts = []
    for name, e in zip(ring.names, m[1 + d:]):
        if e:
            parts.append(name if e == 1 else f"{name}^{e}")
    for name, e in zip(ring.partial_names, m[1:1 + d]):
        if e:
            parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts)


def format_poly(p: OrePoly, order: MonomialOrdering | None = None) -> str:
    """Render a scalar in the operator grammar (vectors render per component)."""
    if p.rank != 1:
        return "[" + ", ".join(format_poly(c, order) for c in p.components()) + "]"
    if not p.terms:
        return "0"
    key = (order or top()).bind(p.ring.r, p.ring.d)
    out = ""
    for i, m in enumerate(sorted(p.terms, key=key, reverse=True)):
        c = Fraction(p.terms[m])
        mono = format_monomial(p.ring, m)
        mag = abs(c)
        if mono:
            body = mono if mag == 1 else f"{_fmt_coeff(mag)}*{mono}"
        else:
            body = _fmt_coeff(mag)
        if i == 0:
            out = ("-" if c < 0 else "") + body
        else:
            out += (" - " if c < 0 else " + ") + body
    return out


def parse_operator(ring: OreAlgebra, text: str) -> OrePoly:
    """Parse the operator grammar.

    Beyond the canonical ``coeff*generators*partials`` terms, parentheses and
    arbitrary products are accepted; products are operator compositions, so
    ``dx*x`` means ``x*dx + 1``.
    """
    tree = parse(text)

    def build(node: Node) -> OrePoly:
        k = node.kind
        if k == "num":
            return ring.const(node.value)
        if k == "name":
            sym = ring._symbols.get(node.value)
            if sym is None:
                what = "derivation" if node.value.startswith("d") and len(node.value) > 1 else "generator"
                raise ParseError(f"unknown {what} {node.value}", text, node.pos)
            return ring.gen(sym[1]) if sym[0] == "f" else ring.partial(sym[1])
        if k == "neg":
            return -build(node.children[0])
        if k == "pow":
            return build(node.children[0]) ** integer_exponent(node.children[1], text)
        if k == "call":
            raise ParseError(f"function call {node.value}() not allowed in an operator", text, node.pos)
        a, b = node.children
        if k == "add":
            return build(a) + build(b)
        if k == "sub":
            return build(a) - build(b)
        if k == "mul":
            return build(a) * build(b)
        if k == "div":
            denom = build(b)
            if not _is_constant(denom):
                raise ParseError("division only by a rational constant", text, b.pos)
            value = next(iter(denom.terms.values()), 0)
            if value == 0:
                raise ParseError("division by zero", text, b.pos)
            return build(a).scale(Fraction(1) / Fraction(value))
        raise ParseError(f"unsupported syntax {k}", text, node.pos)

    return build(tree)


def _is_constant(p: OrePoly) -> bool:
    return all(not any(m[1:]) for m in p.terms)


def involution(p: OrePoly) -> OrePoly:
    """``theta``: identity on ``K``, ``d_j -> -d_j``, reversing products."""
    if p.rank != 1:
        raise ValueError("involution acts on scalars; use syzygy.involution for matrices")
    ring = p.ring
    d = ring.d
    out: dict[Monomial, object] = {}
    for m, c in p.terms.items():
        beta = m[1:1 + d]
        alpha = m[1 + d:]
        sign = -1 if sum(beta) % 2 else 1
        left = {(0,) + beta + (0,) * ring.r: sign * c}
        right = {(0,) + (0,) * d + alpha: 1}
        for m2, c2 in ring.left_mul_terms(left, right).items():
            out[m2] = out.get(m2, 0) + c2
    return OrePoly(ring, out, 1)


def iter_terms(polys: Iterable[OrePoly]):
    for p in polys:
        yield from p.terms.items()
