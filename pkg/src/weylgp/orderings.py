"""Monomial orderings on ``Mon(R)`` and ``Mon(R^{1 x q})``.

A monomial is stored as the flat tuple ``(k, b_1..b_d, a_1..a_r)``: the
0-based component ``k`` followed by the exponents of the partials and then of
the generators (the ``(beta, alpha)`` exponent layout used for Janet division).

Every ordering is turned into a *sort key*: a tuple of integers such that
``key(m1) < key(m2)`` exactly when ``m1 < m2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Callable, Sequence

__all__ = [
    "MonomialOrdering", "degrevlex", "elim_partials", "top", "pot", "elim_components",
    "compare", "ordering_from_dict",
]

Monomial = tuple[int, ...]


@dataclass(frozen=True)
class MonomialOrdering:
    """Ordering descriptor.

    ``kind`` is one of ``degrevlex`` (``weights`` over ``f_1..f_r, d_1..d_d``,
    ``None`` meaning all ones), ``elim-partials``, ``top``/``pot`` (module
    orderings over ``base``) or ``elim`` (components ``< split`` are eliminated;
    ``base``/``base2`` order the two blocks).
    """

    kind: str
    weights: tuple[Fraction, ...] | None = None
    base: "MonomialOrdering | None" = None
    base2: "MonomialOrdering | None" = None
    split: int = 0

    def __post_init__(self):
        if self.kind not in ("degrevlex", "elim-partials", "top", "pot", "elim"):
            raise ValueError(f"unknown ordering kind {self.kind!r}")
        if self.weights is not None:
            ws = tuple(Fraction(w) for w in self.weights)
            if any(w <= 0 for w in ws):
                raise ValueError("weights must be strictly positive")
            object.__setattr__(self, "weights", ws)
        if self.kind in ("top", "pot") and self.base is None:
            object.__setattr__(self, "base", degrevlex())
        if self.kind == "elim":
            if self.split < 1:
                raise ValueError("elimination split must be at least 1")
            if self.base is None:
                object.__setattr__(self, "base", top())
            if self.base2 is None:
                object.__setattr__(self, "base2", self.base)

    @property
    def is_module(self) -> bool:
        return self.kind in ("top", "pot", "elim")

    def scalar_bases(self) -> list["MonomialOrdering"]:
        """The scalar orderings this ordering is built from."""
        if not self.is_module:
            return [self]
        out = []
        for b in (self.base, self.base2):
            if b is not None:
                out.extend(b.scalar_bases())
        return out

    def bind(self, r: int, d: int) -> Callable[[Monomial], tuple]:
        """Return a cached sort-key function for monomials over ``(r, d)``."""
        raw = _key_builder(self, r, d)
        cache: dict[Monomial, tuple] = {}

        def key(m: Monomial) -> tuple:
            k = cache.get(m)
            if k is None:
                k = raw(m)
                cache[m] = k
            return k

        key.ordering = self
        key.r = r
        key.d = d
        return key

    def describe(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.weights is not None:
            out["weights"] = [str(w) for w in self.weights]
        if self.kind in ("top", "pot"):
            out["base"] = self.base.describe()
        if self.kind == "elim":
            out["split"] = self.split
            out["base"] = self.base.describe()
            out["base2"] = self.base2.describe()
        return out

    def __str__(self):
        d = self.describe()
        if self.kind == "degrevlex":
            return "degrevlex" if self.weights is None else f"degrevlex{tuple(str(w) for w in self.weights)}"
        if self.kind == "elim-partials":
            return "elim-partials"
        if self.kind in ("top", "pot"):
            return f"{self.kind}({self.base})"
        return f"elim(split={self.split}, {self.base}, {self.base2})"


def degrevlex(weights: Sequence | None = None) -> MonomialOrdering:
    return MonomialOrdering("degrevlex", None if weights is None else tuple(weights))


def elim_partials() -> MonomialOrdering:
    return MonomialOrdering("elim-partials")


def top(base: MonomialOrdering | None = None) -> MonomialOrdering:
    return MonomialOrdering("top", base=base or degrevlex())


def pot(base: MonomialOrdering | None = None) -> MonomialOrdering:
    return MonomialOrdering("pot", base=base or degrevlex())


def elim_components(split: int, first: MonomialOrdering | None = None,
                    second: MonomialOrdering | None = None) -> MonomialOrdering:
    """Module ordering eliminating the first ``split`` components."""
    first = first or top()
    return MonomialOrdering("elim", base=first, base2=second or first, split=split)


def _scalar_key(o: MonomialOrdering, r: int, d: int) -> Callable[[Monomial], tuple]:
    """Key on the exponent part ``m[1:]`` (partials then generators)."""
    if o.kind == "degrevlex":
        if o.weights is None:
            def key(m):
                # (degree, a_{r+d}, ..., a_1) over the variables f_1..f_r, d_1..d_d
                v = m[1 + d:] + m[1:1 + d]
                return (sum(v),) + v[::-1]
            return key
        if len(o.weights) != r + d:
            raise ValueError(f"degrevlex needs {r + d} weights, got {len(o.weights)}")
        scale = 1
        for w in o.weights:
            scale = lcm(scale, w.denominator)
        iw = [int(w * scale) for w in o.weights]

        def wkey(m):
            v = m[1 + d:] + m[1:1 + d]
            return (sum(w * x for w, x in zip(iw, v)),) + v[::-1]
        return wkey
    if o.kind == "elim-partials":
        def ekey(m):
            b = m[1:1 + d]
            a = m[1 + d:]
            return (sum(b),) + b[::-1] + (sum(a),) + a[::-1]
        return ekey
    raise ValueError(f"{o.kind} is not a scalar ordering")


def _key_builder(o: MonomialOrdering, r: int, d: int) -> Callable[[Monomial], tuple]:
    if not o.is_module:
        return _scalar_key(o, r, d)
    if o.kind == "top":
        base = _key_builder(o.base, r, d)
        return lambda m: base(m) + (-m[0],)
    if o.kind == "pot":
        base = _key_builder(o.base, r, d)
        return lambda m: (-m[0],) + base(m)
    first = _key_builder(o.base, r, d)
    second = _key_builder(o.base2, r, d)
    s = o.split
    return lambda m: (1,) + first(m) if m[0] < s else (0,) + second(m)


def compare(o: MonomialOrdering, m1: Monomial, m2: Monomial, r: int, d: int) -> int:
    """-1, 0 or 1 according to ``m1 < m2``, ``m1 == m2``, ``m1 > m2``."""
    if len(m1) != 1 + r + d or len(m2) != 1 + r + d:
        raise ValueError("monomial length does not match (r, d)")
    key = _key_builder(o, r, d)
    a, b = key(m1), key(m2)
    return (a > b) - (a < b)


def ordering_from_dict(data: dict | str | None) -> MonomialOrdering:
    """Parse an ordering descriptor (JSON structure or a short name)."""
    if data is None:
        return degrevlex()
    if isinstance(data, str):
        data = {"kind": data}
    kind = data.get("kind", "degrevlex")
    if kind == "degrevlex":
        w = data.get("weights")
        return degrevlex(None if w is None else [Fraction(str(x)) for x in w])
    if kind == "elim-partials":
        return elim_partials()
    if kind in ("top", "pot"):
        return MonomialOrdering(kind, base=ordering_from_dict(data.get("base")))
    if kind == "elim":
        first = ordering_from_dict(data.get("base", "top"))
        second = ordering_from_dict(data["base2"]) if "base2" in data else first
        return elim_components(int(data["split"]), first, second)
    raise ValueError(f"unknown ordering kind {kind!r}")
