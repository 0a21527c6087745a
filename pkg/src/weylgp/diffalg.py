"""Finitely presented differential algebras ``K = Q{f_1..f_r}``.

A presentation stores, for every generator ``F_i`` and derivation ``delta_j``,
the polynomial ``g_ij`` with ``delta_j F_i = g_ij``.  Derivations extend to
polynomials in the generators by the chain rule.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import expr as ex
from .parsing import Node, ParseError, integer_exponent, parse

__all__ = [
    "CommPoly", "DiffAlgebraPresentation", "ValidationReport", "derive",
    "validate", "load_presentation", "presentation_from_dict", "check_realizations",
]

Exponent = tuple[int, ...]


class CommPoly:
    """Commutative polynomial in ``F_1..F_r`` with exact rational coefficients."""

    __slots__ = ("r", "terms")

    def __init__(self, r: int, terms: Mapping[Exponent, object] | None = None):
        self.r = r
        clean: dict[Exponent, Fraction | int] = {}
        for alpha, c in (terms or {}).items():
            if len(alpha) != r:
                raise ValueError(f"exponent {alpha} does not have length {r}")
            if c:
                clean[tuple(alpha)] = c
        self.terms = clean

    @classmethod
    def constant(cls, r: int, c) -> "CommPoly":
        return cls(r, {(0,) * r: c})

    @classmethod
    def generator(cls, r: int, i: int) -> "CommPoly":
        alpha = [0] * r
        alpha[i] = 1
        return cls(r, {tuple(alpha): 1})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def degree_in(self, i: int) -> int:
        return max((a[i] for a in self.terms), default=-1)

    def __eq__(self, other):
        return isinstance(other, CommPoly) and self.r == other.r and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "CommPoly") -> "CommPoly":
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0) + c
        return CommPoly(self.r, out)

    def __neg__(self):
        return CommPoly(self.r, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "CommPoly":
        return CommPoly(self.r, {a: c * v for a, v in self.terms.items()})

    def __mul__(self, other: "CommPoly") -> "CommPoly":
        if not isinstance(other, CommPoly):
            return self.scale(other)
        out: dict[Exponent, object] = {}
        for a, c in self.terms.items():
            for b, d in other.terms.items():
                m = tuple(x + y for x, y in zip(a, b))
                out[m] = out.get(m, 0) + c * d
        return CommPoly(self.r, out)

    __rmul__ = scale

    def __pow__(self, n: int) -> "CommPoly":
        out = CommPoly.constant(self.r, 1)
        for _ in range(n):
            out = out * self
        return out

    def partial(self, i: int) -> "CommPoly":
        """Formal partial derivative with respect to ``F_i``."""
        out: dict[Exponent, object] = {}
        for a, c in self.terms.items():
            if a[i]:
                b = list(a)
                b[i] -= 1
                out[tuple(b)] = out.get(tuple(b), 0) + c * a[i]
        return CommPoly(self.r, out)

    def to_string(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for a in sorted(self.terms, key=lambda a: (-sum(a), tuple(-x for x in a))):
            c = Fraction(self.terms[a])
            factors = []
            for name, e in zip(names, a):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            coeff = str(mag.numerator) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
            if factors:
                body = "*".join(([coeff] if mag != 1 else []) + factors)
            else:
                body = coeff
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"CommPoly({self.to_string([f'F{i + 1}' for i in range(self.r)])})"


@dataclass(frozen=True, eq=False)
class DiffAlgebraPresentation:
    """Presentation of ``K`` by generator names and the derivation table.

    ``table[i][j]`` is ``g_ij = delta_j F_i``.  ``coordinates`` names the
    coordinate variable differentiated by each derivation (used by realizations).
    """

    generator_names: tuple[str, ...]
    derivation_names: tuple[str, ...]
    table: tuple[tuple[CommPoly, ...], ...]
    coordinates: tuple[str, ...] = ()
    realizations: tuple[ex.Expr, ...] | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        r, d = self.r, self.d
        if len(self.table) != r or any(len(row) != d for row in self.table):
            raise ValueError(f"derivation table must be {r}x{d}")
        for row in self.table:
            for g in row:
                if g.r != r:
                    raise ValueError("table polynomial has wrong number of variables")
        if not self.coordinates:
            object.__setattr__(self, "coordinates", tuple(_default_coordinate(n, j) for j, n in enumerate(self.derivation_names)))
        if len(self.coordinates) != d:
            raise ValueError("one coordinate name per derivation is required")
        if self.realizations is not None and len(self.realizations) != r:
            raise ValueError("one realization per generator is required")
        names = list(self.generator_names) + list(self.derivation_names)
        if len(set(names)) != len(names):
            raise ValueError("generator and derivation names must be distinct")

    @property
    def r(self) -> int:
        return len(self.generator_names)

    @property
    def d(self) -> int:
        return len(self.derivation_names)

    def g(self, i: int, j: int) -> CommPoly:
        return self.table[i][j]

    def derive_monomial(self, alpha: Exponent, j: int) -> dict[Exponent, object]:
        """``delta_j`` of the monomial ``F^alpha`` as a term dictionary (cached)."""
        key = (alpha, j)
        cache = self._cache
        hit = cache.get(key)
        if hit is not None:
            return hit
        out: dict[Exponent, object] = {}
        for i, a in enumerate(alpha):
            if not a:
                continue
            g = self.table[i][j]
            if not g.terms:
                continue
            base = list(alpha)
            base[i] -= 1
            for b, c in g.terms.items():
                m = tuple(x + y for x, y in zip(base, b))
                out[m] = out.get(m, 0) + a * c
        out = {m: c for m, c in out.items() if c}
        cache[key] = out
        return out

    @cached_property
    def is_weyl(self) -> bool:
        return self.r == 0

    def realization_of(self, p: CommPoly, side_suffix: str = "") -> ex.Expr:
        """Realize a polynomial in the generators as a coordinate expression."""
        if self.realizations is None:
            raise ValueError("presentation carries no realizations")
        reals = self.realizations
        if side_suffix:
            mapping = {c: ex.var(c + side_suffix) for c in self.coordinates}
            reals = tuple(ex.substitute(e, mapping) for e in reals)
        terms = []
        for alpha, c in p.terms.items():
            factors = [ex.const(c)]
            for e, a in zip(reals, alpha):
                if a:
                    factors.append(ex.power(e, a))
            terms.append(ex.mul(*factors))
        return ex.add(*terms)

    def to_dict(self) -> dict:
        out = {
            "generators": list(self.generator_names),
            "derivations": list(self.derivation_names),
            "coordinates": list(self.coordinates),
            "table": [[g.to_string(self.generator_names) for g in row] for row in self.table],
        }
        if self.realizations is not None:
            out["realizations"] = [ex.to_string(e) for e in self.realizations]
        return out


def _default_coordinate(name: str, j: int) -> str:
    if name.startswith("d") and len(name) > 1:
        return name[1:]
    return f"x{j + 1}"


def derive(P: DiffAlgebraPresentation, p: CommPoly, j: int) -> CommPoly:
    """Apply ``delta_j`` (0-based ``j``) to ``p`` by the chain rule."""
    if not 0 <= j < P.d:
        raise IndexError(f"derivation index {j} out of range 0..{P.d - 1}")
    if p.r != P.r:
        raise ValueError("polynomial does not belong to this presentation")
    out: dict[Exponent, object] = {}
    for alpha, c in p.terms.items():
        for m, v in P.derive_monomial(alpha, j).items():
            out[m] = out.get(m, 0) + c * v
    return CommPoly(P.r, out)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violation: tuple[int, int, int] | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def validate(P: DiffAlgebraPresentation) -> ValidationReport:
    """Check that the derivations commute on every generator.

    Returns the first 0-based triple ``(i, j, l)`` with
    ``delta_l(delta_j F_i) != delta_j(delta_l F_i)``.
    """
    for i in range(P.r):
        for j in range(P.d):
            for l in range(j + 1, P.d):
                a = derive(P, P.table[i][j], l)
                b = derive(P, P.table[i][l], j)
                if a != b:
                    names = P.generator_names
                    return ValidationReport(
                        False, (i, j, l),
                        f"{P.derivation_names[l]}({P.derivation_names[j]} {names[i]}) = {a.to_string(names)} "
                        f"but {P.derivation_names[j]}({P.derivation_names[l]} {names[i]}) = {b.to_string(names)}",
                    )
    return ValidationReport(True)


def check_realizations(P: DiffAlgebraPresentation, box: Sequence[tuple[float, float]],
                       n: int = 100, step: float = 1e-5, seed: int = 0) -> float:
    """Largest |central-difference derivative of a realization - realized table entry|.

    Samples ``n`` points uniformly from ``box``.
    """
    if P.realizations is None:
        raise ValueError("presentation carries no realizations")
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    pts = lo + (hi - lo) * rng.random((n, P.d))
    coords = list(P.coordinates)
    worst = 0.0
    for i in range(P.r):
        f = ex.compile_expr(P.realizations[i], coords)
        for j in range(P.d):
            g = ex.compile_expr(P.realization_of(P.table[i][j]), coords)
            plus = pts.copy()
            minus = pts.copy()
            plus[:, j] += step
            minus[:, j] -= step
            fd = (f(*plus.T) - f(*minus.T)) / (2 * step)
            worst = max(worst, float(np.max(np.abs(fd - g(*pts.T)))))
    return worst


# -- construction from text ---------------------------------------------------

def parse_commpoly(text: str, names: Sequence[str]) -> CommPoly:
    """Parse a polynomial in the generator names (``+ - * ^``, rational literals)."""
    r = len(names)
    index = {n: i for i, n in enumerate(names)}
    tree = parse(text)

    def build(node: Node) -> CommPoly:
        k = node.kind
        if k == "num":
            return CommPoly.constant(r, _as_int(node.value))
        if k == "name":
            if node.value not in index:
                raise ParseError(f"unknown generator {node.value}", text, node.pos)
            return CommPoly.generator(r, index[node.value])
        if k == "neg":
            return -build(node.children[0])
        if k == "pow":
            return build(node.children[0]) ** integer_exponent(node.children[1], text)
        if k == "call":
            raise ParseError(f"function {node.value} not allowed in a polynomial", text, node.pos)
        a, b = node.children
        if k == "add":
            return build(a) + build(b)
        if k == "sub":
            return build(a) - build(b)
        if k == "mul":
            return build(a) * build(b)
        if k == "div":
            if b.kind != "num":
                raise ParseError("division only by a rational literal", text, b.pos)
            if b.value == 0:
                raise ParseError("division by zero", text, b.pos)
            return build(a).scale(Fraction(1) / b.value)
        raise ParseError(f"unsupported syntax {k}", text, node.pos)

    return build(tree)


def _as_int(v: Fraction):
    return int(v) if v.denominator == 1 else v


def presentation_from_dict(data: Mapping) -> DiffAlgebraPresentation:
    """Build a presentation from the JSON document structure."""
    try:
        gens = tuple(data.get("generators", ()))
        ders = tuple(data["derivations"])
    except KeyError as err:
        raise ValueError(f"presentation is missing field {err}") from None
    table_src = data.get("table", [])
    if len(table_src) != len(gens):
        raise ValueError(f"table needs {len(gens)} rows, found {len(table_src)}")
    table = []
    for i, row in enumerate(table_src):
        if len(row) != len(ders):
            raise ValueError(f"table row {i + 1} needs {len(ders)} entries")
        table.append(tuple(parse_commpoly(str(s), gens) for s in row))
    coords = tuple(data.get("coordinates", ()))
    reals = data.get("realizations")
    realizations = None
    if reals is not None:
        if isinstance(reals, Mapping):
            reals = [reals[g] for g in gens]
        variables = coords or tuple(_default_coordinate(n, j) for j, n in enumerate(ders))
        realizations = tuple(ex.parse_expr(str(s), variables) for s in reals)
    return DiffAlgebraPresentation(gens, ders, tuple(table), coords, realizations)


def load_presentation(path) -> DiffAlgebraPresentation:
    with open(path, encoding="utf-8") as fh:
        return presentation_from_dict(json.load(fh))


def make_presentation(generators: Iterable[str], derivations: Iterable[str], table: Sequence[Sequence[str]],
                      realizations: Sequence[str] | None = None,
                      coordinates: Sequence[str] | None = None) -> DiffAlgebraPresentation:
    """Convenience constructor from strings."""
    data = {"generators": list(generators), "derivations": list(derivations), "table": table}
    if realizations is not None:
        data["realizations"] = list(realizations)
    if coordinates is not None:
        data["coordinates"] = list(coordinates)
    return presentation_from_dict(data)


def content_lcm(values: Iterable[Fraction | int]) -> int:
    den = 1
    for v in values:
        den = lcm(den, Fraction(v).denominator)
    return den
