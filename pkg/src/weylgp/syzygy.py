"""Nullspaces of operator matrices, parametrizations and their intersections."""
from __future__ import annotations

from dataclasses import dataclass, field

from .janet import JanetBasis, autoreduce, janet_basis
from .orderings import MonomialOrdering, elim_components, top
from .ore import OperatorMatrix, OreAlgebra, OrePoly, involution as scalar_involution

__all__ = [
    "left_kernel", "right_kernel", "involution", "parametrize", "ParametrizationResult",
    "intersect_parametrizations", "IntersectionResult", "row_module_basis", "rows_in_row_module",
    "same_row_module", "same_column_module", "MembershipCertificate",
]


def _base(ordering: MonomialOrdering | None) -> MonomialOrdering:
    if ordering is None:
        return top()
    return ordering if ordering.is_module else top(ordering)


def left_kernel(A: OperatorMatrix, ordering: MonomialOrdering | None = None) -> OperatorMatrix:
    """Generators (as rows) of ``{w in R^{1 x a} : w A = 0}``.

    The rows ``(A_i | e_i)`` of ``(A  I_a)`` generate a module whose Janet basis
    under an ordering eliminating the first ``b`` components contains a
    generating set of all its elements with vanishing first block.
    """
    ring = A.ring
    a, b = A.shape
    if a == 0:
        return OperatorMatrix(ring, [], 0)
    if b == 0:
        return OperatorMatrix.identity(ring, a)
    base = _base(ordering)
    order = elim_components(b, base, base)
    rows = []
    for i in range(a):
        row = ring.vector(list(A.rows[i]) + [ring.one() if k == i else ring.zero() for k in range(a)])
        rows.append(row)
    G = janet_basis(rows, order)
    kept = [g.slice(b, b + a) for g in G.elements if all(m[0] >= b for m in g.terms)]
    kept = autoreduce(kept, base)
    return OperatorMatrix.from_vectors(ring, kept, a)


def involution(A: OperatorMatrix) -> OperatorMatrix:
    """Entrywise ``theta`` of the transpose."""
    return OperatorMatrix(A.ring, [[scalar_involution(e) for e in col] for col in
                                   (A.column(j) for j in range(A.ncols))], A.nrows)


def right_kernel(A: OperatorMatrix, ordering: MonomialOrdering | None = None) -> OperatorMatrix:
    """Generators (as columns) of ``{v : A v = 0}``, computed as ``theta(leftKernel(theta(A)))``."""
    return involution(left_kernel(involution(A), ordering))


def row_module_basis(A: OperatorMatrix, ordering: MonomialOrdering | None = None,
                     track: bool = False) -> JanetBasis | None:
    """Janet basis of the row module of ``A`` (``None`` for the zero module)."""
    rows = [v for v in A.row_vectors() if not v.is_zero()]
    if not rows:
        return None
    return janet_basis(rows, _base(ordering), track=track)


@dataclass
class MembershipCertificate:
    """``row = sum_k combination[k] * A_k`` when ``member``; otherwise the nonzero remainder."""

    row: OrePoly
    member: bool
    combination: list[OrePoly] | None
    remainder: OrePoly

    def verify(self, A: OperatorMatrix) -> bool:
        if not self.member:
            return False
        ring = A.ring
        acc = ring.zero(A.ncols)
        for c, v in zip(self.combination, A.row_vectors()):
            if not c.is_zero():
                acc = acc + c * v
        return acc == self.row

    def to_dict(self) -> dict:
        return {
            "row": [str(c) for c in self.row.components()],
            "member": self.member,
            "combination": None if self.combination is None else [str(c) for c in self.combination],
            "remainder": [str(c) for c in self.remainder.components()],
        }


def rows_in_row_module(rows: OperatorMatrix, A: OperatorMatrix,
                       ordering: MonomialOrdering | None = None) -> list[MembershipCertificate]:
    """Decide membership of every row of ``rows`` in the row module of ``A`` with certificates."""
    ring = A.ring
    G = row_module_basis(A, ordering, track=True)
    nz = [k for k in range(A.nrows) if not A.row_vector(k).is_zero()]
    out = []
    for v in rows.row_vectors():
        if G is None:
            member = v.is_zero()
            comb = [ring.zero() for _ in range(A.nrows)] if member else None
            out.append(MembershipCertificate(v, member, comb, v))
            continue
        res = G.reduce(v, track=True)
        if not res.remainder.is_zero():
            out.append(MembershipCertificate(v, False, None, res.remainder))
            continue
        comb = [ring.zero() for _ in range(A.nrows)]
        for q, cof in zip(res.quotients, G.cofactors):
            if q.is_zero():
                continue
            for pos, c in zip(nz, cof.components()):
                if not c.is_zero():
                    comb[pos] = comb[pos] + q * c
        out.append(MembershipCertificate(v, True, comb, res.remainder))
    return out


def same_row_module(A: OperatorMatrix, B: OperatorMatrix, ordering: MonomialOrdering | None = None) -> bool:
    """Mutual membership of the rows of ``A`` and ``B``."""
    if A.ncols != B.ncols:
        return False
    GA = row_module_basis(A, ordering)
    GB = row_module_basis(B, ordering)
    def inside(M, G):
        return all(v.is_zero() if G is None else G.is_member(v) for v in M.row_vectors())
    return inside(A, GB) and inside(B, GA)


def same_column_module(A: OperatorMatrix, B: OperatorMatrix, ordering: MonomialOrdering | None = None) -> bool:
    """Equality of the right modules generated by the columns (via ``theta``)."""
    if A.nrows != B.nrows:
        return False
    return same_row_module(involution(A), involution(B), ordering)


@dataclass
class ParametrizationResult:
    A: OperatorMatrix
    B: OperatorMatrix
    A_prime: OperatorMatrix
    parametrizable: bool
    certificates: list[MembershipCertificate] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "A": self.A.to_strings(),
            "B": self.B.to_strings(),
            "B_shape": list(self.B.shape),
            "A_prime": self.A_prime.to_strings(),
            "parametrizable": self.parametrizable,
            "certificates": [c.to_dict() for c in self.certificates],
        }


def parametrize(A: OperatorMatrix, ordering: MonomialOrdering | None = None) -> ParametrizationResult:
    """Right nullspace ``B`` of ``A``, left nullspace ``A'`` of ``B`` and the controllability test.

    ``A`` is parametrizable exactly when every row of ``A'`` lies in the row
    module of ``A``; the certificates carry the explicit combinations.
    """
    B = right_kernel(A, ordering)
    A_prime = left_kernel(B, ordering)
    certs = rows_in_row_module(A_prime, A, ordering)
    return ParametrizationResult(A, B, A_prime, all(c.member for c in certs), certs)


@dataclass
class IntersectionResult:
    P: OperatorMatrix
    C: OperatorMatrix
    C1: OperatorMatrix
    C2: OperatorMatrix


def intersect_parametrizations(B1: OperatorMatrix, B2: OperatorMatrix,
                               ordering: MonomialOrdering | None = None) -> IntersectionResult:
    """Parametrization ``P = B1 C1`` of the intersection of the images of ``B1`` and ``B2``.

    ``C = (C1; C2)`` generates the right nullspace of ``[B1 B2]``, so
    ``B1 C1 = -B2 C2`` holds exactly; this identity is asserted.
    """
    if B1.nrows != B2.nrows:
        raise ValueError(f"row counts differ: {B1.nrows} vs {B2.nrows}")
    l1 = B1.ncols
    C = right_kernel(B1.hstack(B2), ordering)
    C1 = C.submatrix(slice(0, l1), slice(None))
    C2 = C.submatrix(slice(l1, C.nrows), slice(None))
    P = B1 @ C1
    if not (P + B2 @ C2).is_zero():
        raise ArithmeticError("B1 C1 + B2 C2 does not vanish")
    keep = [j for j in range(P.ncols) if not all(e.is_zero() for e in P.column(j))]
    if len(keep) != P.ncols:
        P = P.submatrix(slice(None), keep)
        C1 = C1.submatrix(slice(None), keep)
        C2 = C2.submatrix(slice(None), keep)
        C = C1.vstack(C2)
    return IntersectionResult(P, C, C1, C2)
