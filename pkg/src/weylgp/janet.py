"""Janet division, completion, involutive reduction and Janet bases.

Monomials are the flat tuples of :mod:`weylgp.orderings`; Janet division acts
on the exponent part ``m[1:]`` (partials first, then generators) separately in
every component.  Basis elements are kept with primitive integer coefficients;
reduction cross-multiplies instead of dividing by leading coefficients.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from .diffalg import DiffAlgebraPresentation
from .orderings import MonomialOrdering, elim_components, top
from .ore import OreAlgebra, OrePoly, assumption_violations, format_monomial, format_poly

__all__ = [
    "multiplicative_variables", "janet_completion", "involutive_divisor", "is_janet_complete",
    "JanetBasis", "ReductionResult", "janet_basis", "autoreduce", "is_member", "AssumptionError",
    "IncompleteBasisError",
]

Monomial = tuple[int, ...]


class AssumptionError(ValueError):
    """The ordering does not satisfy ``lm(d_j f_i) = f_i d_j``; ``pairs`` holds 1-based ``(i, j)``."""

    def __init__(self, pairs: Sequence[tuple[int, int]], presentation: DiffAlgebraPresentation):
        self.pairs = [(i + 1, j + 1) for i, j in pairs]
        names = [f"(d{presentation.derivation_names[j]} on {presentation.generator_names[i]})"
                 for i, j in pairs]
        super().__init__("ordering violates the leading-monomial assumption at (i, j) = "
                         + ", ".join(f"({i}, {j})" for i, j in self.pairs) + " " + " ".join(names))


class IncompleteBasisError(ValueError):
    pass


# -- monomial-level Janet division ------------------------------------------

def _divides(a: Monomial, b: Monomial) -> bool:
    return a[0] == b[0] and all(x <= y for x, y in zip(a[1:], b[1:]))


def multiplicative_variables(M: Iterable[Monomial]) -> dict[Monomial, tuple[bool, ...]]:
    """Janet partition for every monomial of ``M``.

    The result maps each monomial to a tuple of flags over the exponent
    positions ``m[1:]`` (``True`` = multiplicative).  Components are treated
    independently.
    """
    M = list(dict.fromkeys(M))
    if not M:
        raise ValueError("multiplicative variables of an empty set")
    n = len(M[0]) - 1
    flags = {m: [False] * n for m in M}
    for k in range(n):
        maxes: dict[tuple, int] = {}
        for m in M:
            key = (m[0],) + m[1:1 + k]
            if m[1 + k] > maxes.get(key, -1):
                maxes[key] = m[1 + k]
        for m in M:
            if m[1 + k] == maxes[(m[0],) + m[1:1 + k]]:
                flags[m][k] = True
    return {m: tuple(f) for m, f in flags.items()}


class _JanetTree:
    """Decision tree locating the unique involutive divisor in a Janet-divided set."""

    def __init__(self, monomials: Sequence[Monomial], payload: Sequence[object]):
        self.n = len(monomials[0]) - 1 if monomials else 0
        self.roots: dict[int, object] = {}
        groups: dict[int, list] = {}
        for m, p in zip(monomials, payload):
            groups.setdefault(m[0], []).append((m[1:], p))
        for k, items in groups.items():
            self.roots[k] = self._build(items, 0)

    def _build(self, items, pos):
        if pos == self.n:
            return items[0][1]
        children: dict[int, list] = {}
        for e, p in items:
            children.setdefault(e[pos], []).append((e, p))
        mx = max(children)
        return (mx, {v: self._build(c, pos + 1) for v, c in children.items()})

    def find(self, t: Monomial):
        node = self.roots.get(t[0])
        if node is None:
            return None
        for v in t[1:]:
            mx, children = node
            if v >= mx:
                node = children[mx]
            else:
                node = children.get(v)
                if node is None:
                    return None
        return node


def involutive_divisor(t: Monomial, M: Sequence[Monomial]) -> Monomial | None:
    """The element of ``M`` whose Janet cone contains ``t`` (``None`` if none)."""
    if not M:
        return None
    M = list(dict.fromkeys(M))
    return _JanetTree(M, M).find(t)


def _nonmultiplicative_prolongations(M: Sequence[Monomial]) -> list[tuple[Monomial, int]]:
    out = []
    for m, f in multiplicative_variables(M).items():
        for pos, mult in enumerate(f):
            if not mult:
                out.append((m, pos))
    return out


def _shift(m: Monomial, pos: int) -> Monomial:
    i = pos + 1
    return m[:i] + (m[i] + 1,) + m[i + 1:]


def is_janet_complete(M: Iterable[Monomial]) -> bool:
    M = list(dict.fromkeys(M))
    tree = _JanetTree(M, M)
    return all(tree.find(_shift(m, pos)) is not None for m, pos in _nonmultiplicative_prolongations(M))


def janet_completion(M: Iterable[Monomial], ordering: MonomialOrdering | None = None,
                     r: int | None = None, d: int | None = None) -> list[Monomial]:
    """Smallest Janet complete superset of ``M``.

    Non-multiplicative prolongations that escape every cone are added one at a
    time, smallest first (total degree, then ``ordering`` when given).
    """
    M = list(dict.fromkeys(M))
    if not M:
        raise ValueError("completion of an empty set")
    if ordering is not None and r is not None and d is not None:
        o = ordering if ordering.is_module else top(ordering)
        key = o.bind(r, d)
        sort_key = lambda m: (sum(m[1:]), key(m))
    else:
        sort_key = lambda m: (sum(m[1:]), m)
    while True:
        tree = _JanetTree(M, M)
        missing = [u for u in (_shift(m, pos) for m, pos in _nonmultiplicative_prolongations(M))
                   if tree.find(u) is None]
        if not missing:
            return sorted(M, key=sort_key)
        M.append(min(missing, key=sort_key))


# -- polynomial-level machinery ----------------------------------------------

def _primitive_terms(terms: dict) -> dict:
    """Coprime integer coefficients; the leading sign is left to the caller."""
    den = 1
    for c in terms.values():
        if isinstance(c, Fraction):
            den = den * c.denominator // gcd(den, c.denominator)
    if den != 1:
        terms = {m: int(c * den) for m, c in terms.items()}
    g = 0
    for c in terms.values():
        g = gcd(g, c)
        if g == 1:
            return dict(terms)
    return {m: c // g for m, c in terms.items()}


class _Element:
    """A basis element with cached data for fast reduction."""

    __slots__ = ("terms", "lm", "lc", "dcache")

    def __init__(self, terms: dict, lm: Monomial):
        if terms[lm] < 0:
            terms = {m: -c for m, c in terms.items()}
        self.terms = terms
        self.lm = lm
        self.lc = terms[lm]
        self.dcache: dict[tuple[int, ...], dict] = {}


class _Engine:
    """Shared state for one ring, rank and ordering."""

    def __init__(self, ring: OreAlgebra, rank: int, ordering: MonomialOrdering, active: int | None = None):
        self.ring = ring
        self.rank = rank
        # components >= active carry cofactors and are never reduced
        self.active = rank if active is None else active
        self.ordering = ordering if (ordering.is_module or rank == 1) else top(ordering)
        self.key = self.ordering.bind(ring.r, ring.d)
        self._neg: dict[Monomial, tuple] = {}
        self.steps = 0

    def negkey(self, m: Monomial) -> tuple:
        k = self._neg.get(m)
        if k is None:
            k = tuple(-x for x in self.key(m))
            self._neg[m] = k
        return k

    def lm(self, terms: dict) -> Monomial:
        return max(terms, key=self.key)

    def element(self, terms: dict) -> _Element:
        terms = _primitive_terms(terms)
        return _Element(terms, self.lm(terms))

    def partial_multiple(self, e: _Element, beta: tuple[int, ...]) -> dict:
        """``d^beta * e`` (cached)."""
        hit = e.dcache.get(beta)
        if hit is not None:
            return hit
        if not any(beta):
            return e.terms
        j = max(i for i, b in enumerate(beta) if b)
        prev = beta[:j] + (beta[j] - 1,) + beta[j + 1:]
        res = self.ring.left_mul_partial(self.partial_multiple(e, prev), j)
        e.dcache[beta] = res
        return res

    def multiple(self, e: _Element, u: Monomial) -> dict:
        """``u * e`` for the monomial ``u = f^alpha d^beta`` (component entry ignored)."""
        d = self.ring.d
        beta = u[1:1 + d]
        alpha = u[1 + d:]
        base = self.partial_multiple(e, beta)
        if not any(alpha):
            return base
        h = 1 + d
        return {m[:h] + tuple(x + y for x, y in zip(m[h:], alpha)): c for m, c in base.items()}

    def prolongation(self, e: _Element, pos: int) -> dict:
        u = [0] * (1 + self.ring.r + self.ring.d)
        u[1 + pos] = 1
        return self.multiple(e, tuple(u))

    def head_reduce(self, terms: dict, divisors: Sequence[_Element]) -> dict:
        """Ordinary top reduction until the leading monomial has no divisor."""
        while terms:
            lm = self.lm(terms)
            if lm[0] >= self.active:
                return {}
            h = next((e for e in divisors if _divides(e.lm, lm)), None)
            if h is None:
                return terms
            c = terms[lm]
            u = (0,) + tuple(x - y for x, y in zip(lm[1:], h.lm[1:]))
            prod = self.multiple(h, u)
            g = gcd(c, h.lc)
            a, b = h.lc // g, c // g
            out = {m: a * v for m, v in terms.items()} if a != 1 else dict(terms)
            for m, v in prod.items():
                w = out.get(m, 0) - b * v
                if w:
                    out[m] = w
                else:
                    out.pop(m, None)
            out.pop(lm, None)
            terms = _primitive_terms(out) if out else out
        return terms

    def autoreduce(self, polys: Iterable[dict]) -> list[_Element]:
        """Head-autoreduce: pairwise distinct, mutually non-dividing leading monomials."""
        queue = [p for p in polys if p]
        result: list[_Element] = []
        while queue:
            p = self.head_reduce(queue.pop(), result)
            if not p:
                continue
            e = self.element(p)
            keep = []
            for h in result:
                if _divides(e.lm, h.lm):
                    queue.append(h.terms)
                else:
                    keep.append(h)
            keep.append(e)
            result = keep
        return result


@dataclass
class ReductionResult:
    """``p = sum(quotients[i] * basis[i]) + remainder`` exactly (quotients only when tracked)."""

    remainder: OrePoly
    quotients: list[OrePoly] | None
    steps: int


class JanetBasis:
    """Finite set of operators whose leading monomials are Janet divided.

    ``complete`` records whether the leading-monomial set is Janet complete;
    :meth:`reduce` requires it.
    """

    def __init__(self, engine: _Engine, elements: Sequence[_Element], is_basis: bool = False):
        self._engine = engine
        self.ring = engine.ring
        self.rank = engine.rank
        self.ordering = engine.ordering
        self._elements = list(elements)
        lms = [e.lm for e in self._elements]
        if len(set(lms)) != len(lms):
            raise ValueError("leading monomials must be pairwise distinct")
        self.is_basis = is_basis
        self.cofactors: list[OrePoly] | None = None
        if lms:
            self._mult = multiplicative_variables(lms)
            self._tree = _JanetTree(lms, list(range(len(lms))))
            self.complete = all(self._tree.find(_shift(m, pos)) is not None
                                for m, pos in _nonmultiplicative_prolongations(lms))
        else:
            self._mult = {}
            self._tree = None
            self.complete = True

    # -- inspection ----------------------------------------------------------

    def __len__(self):
        return len(self._elements)

    @property
    def elements(self) -> list[OrePoly]:
        return [OrePoly(self.ring, e.terms, self.rank) for e in self._elements]

    @property
    def leading_monomials(self) -> list[Monomial]:
        return [e.lm for e in self._elements]

    def multiplicative(self, i: int) -> tuple[bool, ...]:
        return self._mult[self._elements[i].lm]

    def variable_names(self) -> list[str]:
        return list(self.ring.partial_names) + list(self.ring.names)

    def multiplicative_names(self, i: int) -> list[str]:
        names = self.variable_names()
        return [n for n, f in zip(names, self.multiplicative(i)) if f]

    def nonmultiplicative_prolongations(self) -> list[tuple[int, int, OrePoly]]:
        """``(element index, position, x * g)`` for every non-multiplicative variable ``x``."""
        out = []
        for i, e in enumerate(self._elements):
            for pos, f in enumerate(self._mult[e.lm]):
                if not f:
                    out.append((i, pos, OrePoly(self.ring, self._engine.prolongation(e, pos), self.rank)))
        return out

    def cone_owner(self, m: Monomial) -> int | None:
        return None if self._tree is None else self._tree.find(m)

    # -- reduction -----------------------------------------------------------

    def _reduce_terms(self, terms: dict, track: bool):
        if not self.complete:
            raise IncompleteBasisError("involutive reduction needs a Janet complete leading-monomial set")
        eng = self._engine
        els = self._elements
        p = dict(terms)
        heap = [(eng.negkey(m), m) for m in p]
        heapq.heapify(heap)
        queued = set(p)
        rem: dict = {}
        mult = 1
        quots: list[dict] | None = [{} for _ in els] if track else None
        steps = 0
        while heap:
            _, m = heapq.heappop(heap)
            queued.discard(m)
            c = p.pop(m, 0)
            if not c:
                continue
            idx = self._tree.find(m) if self._tree is not None else None
            if idx is None:
                rem[m] = c
                continue
            h = els[idx]
            steps += 1
            u = (0,) + tuple(x - y for x, y in zip(m[1:], h.lm[1:]))
            prod = eng.multiple(h, u)
            g = gcd(c, h.lc)
            a, b = h.lc // g, c // g
            if a != 1:
                mult *= a
                for k in p:
                    p[k] *= a
                for k in rem:
                    rem[k] *= a
                if quots is not None:
                    for q in quots:
                        for k in q:
                            q[k] *= a
            for m2, v in prod.items():
                if m2 == m:
                    continue
                w = p.get(m2, 0) - b * v
                if w:
                    p[m2] = w
                    if m2 not in queued:
                        queued.add(m2)
                        heapq.heappush(heap, (eng.negkey(m2), m2))
                else:
                    p.pop(m2, None)
            if quots is not None:
                uu = (0,) + u[1:]
                quots[idx][uu] = quots[idx].get(uu, 0) + b
            if a != 1 and steps % 16 == 0:
                # keep integers small: divide out the common content
                gg = mult
                for dct in [p, rem] + (quots or []):
                    for v in dct.values():
                        gg = gcd(gg, v)
                        if gg == 1:
                            break
                    if gg == 1:
                        break
                if gg > 1:
                    mult //= gg
                    for dct in [p, rem] + (quots or []):
                        for k in dct:
                            dct[k] //= gg
        eng.steps += steps
        return rem, mult, quots, steps

    def reduce(self, p: OrePoly, track: bool = False) -> ReductionResult:
        """Involutive normal form of ``p``: no remainder monomial lies in any cone."""
        if p.ring != self.ring or p.rank != self.rank:
            raise ValueError("polynomial does not live in this module")
        terms = _primitive_terms(p.terms) if p.terms else {}
        scale = Fraction(1)
        if terms:
            some = next(iter(p.terms))
            scale = Fraction(p.terms[some]) / terms[some]
        rem, mult, quots, steps = self._reduce_terms(terms, track)
        factor = scale / mult
        remainder = OrePoly(self.ring, {m: c * factor for m, c in rem.items()}, self.rank)
        quotients = None
        if quots is not None:
            quotients = [OrePoly(self.ring, {m: c * factor for m, c in q.items()}, 1) for q in quots]
        return ReductionResult(remainder, quotients, steps)

    def normal_form(self, p: OrePoly) -> OrePoly:
        return self.reduce(p).remainder

    def is_member(self, p: OrePoly) -> bool:
        return self.reduce(p).remainder.is_zero()

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        names = self.variable_names()
        out = []
        for i, e in enumerate(self._elements):
            f = self.multiplicative(i)
            poly = OrePoly(self.ring, e.terms, self.rank)
            out.append({
                "element": format_poly(poly, self.ordering) if self.rank == 1
                else [format_poly(c, self.ordering) for c in poly.components()],
                "leading_monomial": format_monomial(self.ring, e.lm) or "1",
                "component": e.lm[0] + 1,
                "multiplicative": [n for n, x in zip(names, f) if x],
                "nonmultiplicative": [n for n, x in zip(names, f) if not x],
            })
        return {"ordering": self.ordering.describe(), "rank": self.rank, "complete": self.complete,
                "elements": out}


def janet_basis(generators: Sequence[OrePoly], ordering: MonomialOrdering | None = None,
                track: bool = False, max_rounds: int = 10_000) -> JanetBasis:
    """Janet basis of the left module generated by ``generators``.

    Loop: autoreduce, complete the leading-monomial set by adding
    non-multiplicative prolongations, reduce every non-multiplicative
    prolongation, and start over with the nonzero remainders added.

    With ``track=True`` every basis element ``g`` comes with a cofactor row
    ``c`` (``basis.cofactors``) such that ``g = sum_k c[k] * generators[k]``.
    """
    gens = [g for g in generators]
    if not gens:
        raise ValueError("at least one generator is required")
    ring = gens[0].ring
    rank = gens[0].rank
    for g in gens:
        if g.ring != ring or g.rank != rank:
            raise ValueError("generators must live in the same module")
        if g.is_zero():
            raise ValueError("zero generator")
    ordering = ordering or top()
    bad = assumption_violations(ring.presentation, ordering)
    if bad:
        raise AssumptionError(bad, ring.presentation)
    if not track:
        eng = _Engine(ring, rank, ordering)
        return _janet_loop(eng, eng.autoreduce([dict(g.terms) for g in gens]), max_rounds)
    # augmented rows (g_k | e_k); the passive block records the combination
    n = len(gens)
    base = ordering if (ordering.is_module or rank == 1) else top(ordering)
    if not base.is_module:
        base = top(base)
    aug_order = elim_components(rank, base, top())
    aug = _Engine(ring, rank + n, aug_order, active=rank)
    rows = []
    for k, g in enumerate(gens):
        t = dict(g.terms)
        t[(rank + k,) + (0,) * (ring.r + ring.d)] = 1
        rows.append(t)
    full = _janet_loop(aug, aug.autoreduce(rows), max_rounds)
    eng = _Engine(ring, rank, ordering)
    elements, cofactors = [], []
    for e in full._elements:
        active = {m: c for m, c in e.terms.items() if m[0] < rank}
        passive = {(m[0] - rank,) + m[1:]: c for m, c in e.terms.items() if m[0] >= rank}
        el = _Element(active, e.lm)
        sign = 1 if el.terms is active else -1
        elements.append(el)
        cofactors.append(OrePoly(ring, {m: sign * c for m, c in passive.items()}, n))
    basis = JanetBasis(eng, elements, is_basis=True)
    basis.cofactors = cofactors
    return basis


def _janet_loop(eng: _Engine, elements: list[_Element], max_rounds: int) -> JanetBasis:
    for _ in range(max_rounds):
        elements = _complete_elements(eng, elements)
        basis = JanetBasis(eng, elements)
        prolongs = []
        for e in elements:
            for pos, f in enumerate(basis._mult[e.lm]):
                if not f:
                    prolongs.append(eng.prolongation(e, pos))
        prolongs.sort(key=lambda t: eng.key(eng.lm(t)))
        remainders = []
        for t in prolongs:
            rem, _, _, _ = basis._reduce_terms(t, False)
            if any(m[0] < eng.active for m in rem):
                remainders.append(rem)
        if not remainders:
            basis.is_basis = True
            return basis
        old = [e.lm for e in elements]
        for rem in remainders:
            lm = eng.lm(rem)
            assert not any(_divides(o, lm) for o in old), "remainder leading monomial already in the ideal"
        elements = eng.autoreduce([e.terms for e in elements] + remainders)
        # the leading-monomial ideal must strictly grow
        assert all(any(_divides(e.lm, o) for e in elements) for o in old)
    raise RuntimeError("Janet basis computation did not stabilize")


def _complete_elements(eng: _Engine, elements: list[_Element]) -> list[_Element]:
    elements = list(elements)
    while True:
        lms = [e.lm for e in elements]
        tree = _JanetTree(lms, lms)
        best = None
        for m, pos in _nonmultiplicative_prolongations(lms):
            u = _shift(m, pos)
            if tree.find(u) is None:
                k = (sum(u[1:]), eng.key(u))
                if best is None or k < best[0]:
                    best = (k, m, pos)
        if best is None:
            return elements
        _, m, pos = best
        e = next(x for x in elements if x.lm == m)
        elements.append(eng.element(eng.prolongation(e, pos)))


def autoreduce(polys: Sequence[OrePoly], ordering: MonomialOrdering | None = None) -> list[OrePoly]:
    """Head-autoreduced, content-stripped generators of the same module, sorted by leading monomial."""
    polys = [p for p in polys if not p.is_zero()]
    if not polys:
        return []
    ring, rank = polys[0].ring, polys[0].rank
    eng = _Engine(ring, rank, ordering or top())
    els = eng.autoreduce([dict(p.terms) for p in polys])
    els.sort(key=lambda e: eng.key(e.lm))
    return [OrePoly(ring, e.terms, rank) for e in els]


def is_member(p: OrePoly, G: JanetBasis) -> bool:
    return G.is_member(p)
