"""Multiplication-operator parametrizations of boundary conditions.

Each construction returns a matrix of entries that act on functions by
multiplication.  Entries are either elements of a presented differential
algebra (usable in the symbolic stage) or plain expressions flagged
numeric-only (square roots, absolute values, or products of exponentials
that are not generators of the chosen presentation).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import expr as ex
from .diffalg import CommPoly, DiffAlgebraPresentation, parse_commpoly
from .ore import OperatorMatrix, OreAlgebra, OrePoly

__all__ = [
    "BOX_KINDS", "BoundarySpec", "BoundaryResult", "build_boundary", "codim2_axis", "coordinate_names",
    "box_presentation", "exp_presentation", "double_drop_presentation", "snake_presentation",
    "implicit_boundary", "double_drop", "snake", "spec_from_dict",
]

BOX_KINDS = ("dirichlet-box-poly", "dirichlet-box-exp", "dirichlet-box-sd",
             "dirichlet-neumann-exp", "dirichlet-neumann-sd")
KINDS = BOX_KINDS + ("codim2-axis", "implicit")
CODIM2_VARIANTS = ("two-abs", "radial", "analytic")
DEFAULT_DELTA = Fraction(1, 100)


def coordinate_names(d: int) -> tuple[str, ...]:
    if d <= 3:
        return ("x", "y", "z")[:d]
    return tuple(f"x{i + 1}" for i in range(d))


@dataclass(frozen=True)
class BoundarySpec:
    kind: str
    d: int = 1
    delta: Fraction = DEFAULT_DELTA
    ell: int = 1
    variant: str | None = None
    f: str | None = None
    presentation: DiffAlgebraPresentation | None = None

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        if self.kind not in KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.ell < 1 or self.d < 1:
            raise ValueError("d and ell must be positive")
        if self.kind == "implicit" and (self.f is None or self.presentation is None):
            raise ValueError("implicit boundaries need an expression f and a presentation")
        if self.kind == "codim2-axis" and self.variant not in CODIM2_VARIANTS:
            raise ValueError(f"codim2-axis variant must be one of {CODIM2_VARIANTS}")


@dataclass
class BoundaryResult:
    """``entries`` is the multiplication matrix; ``exprs`` the same entries realized as expressions.

    ``presentation`` is ``None`` for numeric-only results, whose entries are expressions.
    """

    entries: list[list[object]]
    exprs: list[list[ex.Expr]]
    presentation: DiffAlgebraPresentation | None
    numeric_only: bool
    analytic: bool
    boundary: ex.Expr | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def matrix(self) -> OperatorMatrix:
        if self.numeric_only:
            raise ValueError("numeric-only boundary entries are not operators of the presented ring")
        return OperatorMatrix(OreAlgebra(self.presentation), self.entries)


def _poly_in_coords(expr_text: str, coords: Sequence[str]) -> CommPoly:
    return parse_commpoly(expr_text, coords)


def _box_product(coords: Sequence[str], squared: bool) -> str:
    parts = [f"({c}*({c}-1))^2" if squared else f"{c}*({c}-1)" for c in coords]
    return "*".join(parts)


def box_presentation(d: int) -> DiffAlgebraPresentation:
    """Polynomial coefficients ``Q[x_1..x_d]``."""
    coords = coordinate_names(d)
    table = [["1" if i == j else "0" for j in range(d)] for i in range(d)]
    return _make(coords, table, list(coords))


def _make(gens, table, reals, coords=None) -> DiffAlgebraPresentation:
    from .diffalg import make_presentation
    coords = coords or coordinate_names(len(table[0]) if table else 0)
    return make_presentation(gens, ["d" + c for c in coords], table, reals, coords)


def exp_presentation(exponent: str, d: int, name: str = "E") -> DiffAlgebraPresentation:
    """``Q{x_1..x_d, exp(h)}`` for a polynomial ``h``; ``delta_j exp(h) = (d h/d x_j) exp(h)``."""
    coords = coordinate_names(d)
    h = _poly_in_coords(exponent, coords)
    gens = list(coords) + [name]
    r = d + 1
    table = []
    for i in range(d):
        table.append(["1" if i == j else "0" for j in range(d)])
    row = []
    for j in range(d):
        dh = h.partial(j)
        # embed dh (in x's) into the r generators and multiply by E
        lifted = CommPoly(r, {a + (1,): c for a, c in dh.terms.items()})
        row.append(lifted.to_string(gens))
    table.append(row)
    reals = list(coords) + [f"exp({h.to_string(coords)})"]
    return _make(gens, table, reals)


def _sd_factor(c: ex.Expr, delta: Fraction) -> ex.Expr:
    inv = 1 / delta
    num = ex.add(ex.exp(ex.mul(ex.const(-inv), ex.power(c, 2))),
                 ex.mul(ex.const(-2), ex.exp(ex.mul(ex.const(-inv), ex.add(ex.power(c, 2), ex.neg(c), ex.const(1))))),
                 ex.exp(ex.mul(ex.const(-inv), ex.power(ex.sub(c, ex.const(1)), 2))))
    den = ex.sub(ex.exp(ex.const(-inv)), ex.const(1))
    return ex.add(ex.const(1), ex.div(num, den))


def build_boundary(spec: BoundarySpec) -> BoundaryResult:
    """The ``ell x ell`` diagonal multiplication matrix for box and implicit kinds,
    the codimension-2 rows for ``codim2-axis``."""
    if spec.kind == "implicit":
        return implicit_boundary(spec.presentation, spec.f, spec.ell)
    if spec.kind == "codim2-axis":
        return codim2_axis(spec.variant, spec.delta)
    d = spec.d
    coords = coordinate_names(d)
    sign = 1 if (d + 1) % 2 == 0 else -1
    notes = []
    if spec.kind == "dirichlet-box-poly":
        P = box_presentation(d)
        R = OreAlgebra(P)
        entry = R.parse(_box_product(coords, False))
        return _diag_result(entry, P, spec.ell, notes)
    if spec.kind in ("dirichlet-box-exp", "dirichlet-neumann-exp"):
        squared = spec.kind == "dirichlet-neumann-exp"
        prod = _box_product(coords, squared)
        delta = spec.delta
        # the squared product is nonnegative, so its exponent must be negative for every d
        coeff = Fraction(-1 if squared else sign) / delta
        exponent = f"({coeff})*{prod}" if coeff.denominator == 1 else f"({coeff.numerator}/{coeff.denominator})*{prod}"
        P = exp_presentation(exponent, d)
        R = OreAlgebra(P)
        entry = R.parse("1 - E")
        return _diag_result(entry, P, spec.ell, notes)
    # sd variants: numeric-only expressions
    factors = [_sd_factor(ex.var(c), spec.delta) for c in coords]
    prod = ex.mul(*factors)
    e = ex.sqrt(prod) if spec.kind == "dirichlet-box-sd" else prod
    notes.append("numeric-only: not an element of a presented differential algebra")
    z = ex.const(0)
    exprs = [[e if i == j else z for j in range(spec.ell)] for i in range(spec.ell)]
    return BoundaryResult(exprs, exprs, None, True, spec.kind != "dirichlet-box-sd", None, notes)


def _diag_result(entry: OrePoly, P: DiffAlgebraPresentation, ell: int, notes, boundary=None) -> BoundaryResult:
    R = entry.ring
    entries = [[entry if i == j else R.zero() for j in range(ell)] for i in range(ell)]
    real = P.realization_of(entry.coefficient_poly((0,) * P.d))
    z = ex.const(0)
    exprs = [[real if i == j else z for j in range(ell)] for i in range(ell)]
    return BoundaryResult(entries, exprs, P, False, True, boundary if boundary is not None else real, notes)


def codim2_axis(variant: str, delta: Fraction = DEFAULT_DELTA) -> BoundaryResult:
    """Rows vanishing exactly on the axis ``x = y = 0`` in three dimensions."""
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    x, y = ex.var("x"), ex.var("y")
    inv = ex.const(-1 / delta)
    if variant == "two-abs":
        row = [ex.sub(ex.const(1), ex.exp(ex.mul(inv, ex.absolute(x)))),
               ex.sub(ex.const(1), ex.exp(ex.mul(inv, ex.absolute(y))))]
        return BoundaryResult([row], [row], None, True, False, None, ["non-analytic: |x| and |y| nodes"])
    if variant == "radial":
        row = [ex.sub(ex.const(1), ex.exp(ex.mul(inv, ex.sqrt(ex.add(ex.power(x, 2), ex.power(y, 2))))))]
        return BoundaryResult([row], [row], None, True, False, None, ["non-analytic: square root of x^2+y^2"])
    if variant == "analytic":
        c = -1 / delta
        P = exp_presentation(f"({c.numerator}/{c.denominator})*(x^2+y^2)", 3)
        R = OreAlgebra(P)
        entry = R.parse("1 - E")
        real = P.realization_of(entry.coefficient_poly((0,) * P.d))
        return BoundaryResult([[entry]], [[real]], P, False, True, None, [])
    raise ValueError(f"unknown codim2-axis variant {variant!r}")


def implicit_boundary(P: DiffAlgebraPresentation, f: str, ell: int = 1) -> BoundaryResult:
    """``diag(f, ..., f)`` for an element ``f`` of the presented algebra."""
    R = OreAlgebra(P)
    entry = R.parse(f)
    if entry.partial_degree() > 0:
        raise ValueError("an implicit boundary must be a function, not a differential operator")
    return _diag_result(entry, P, ell, [])


def double_drop_presentation() -> DiffAlgebraPresentation:
    """``{x, y, sin(x), cos(x)}`` with ``sin' = cos``, ``cos' = -sin``."""
    return _make(["x", "y", "s", "c"], [["1", "0"], ["0", "1"], ["c", "0"], ["-s", "0"]],
                 ["x", "y", "sin(x)", "cos(x)"], ("x", "y"))


def snake_presentation() -> DiffAlgebraPresentation:
    """``{x, y, sin(y), cos(y), pi}``; ``pi`` is a constant generator."""
    return _make(["x", "y", "sy", "cy", "pi"],
                 [["1", "0"], ["0", "1"], ["0", "cy"], ["0", "-sy"], ["0", "0"]],
                 ["x", "y", "sin(y)", "cos(y)", "pi"], ("x", "y"))


DOUBLE_DROP_F = "y^2 - s^4"
SNAKE_F = "(y - pi/2)*(y + pi/2)*(x - 3*sy)*(x - 3*sy - 2)"
DOUBLE_DROP_BOX = ((0.0, 3.141592653589793), (-1.0, 1.0))
SNAKE_BOX = ((-3.0, 5.0), (-1.5707963267948966, 1.5707963267948966))


def double_drop(ell: int = 2) -> BoundaryResult:
    P = double_drop_presentation()
    return implicit_boundary(P, DOUBLE_DROP_F, ell)


def snake(ell: int = 2) -> BoundaryResult:
    P = snake_presentation()
    return implicit_boundary(P, SNAKE_F, ell)


def spec_from_dict(data: dict, presentation: DiffAlgebraPresentation | None = None) -> BoundarySpec:
    """Parse a ``{"kind", "d", "delta", "f", "ell", "variant"}`` block."""
    kind = data.get("kind")
    if kind in ("double-drop", "snake"):
        P = double_drop_presentation() if kind == "double-drop" else snake_presentation()
        f = DOUBLE_DROP_F if kind == "double-drop" else SNAKE_F
        return BoundarySpec("implicit", 2, DEFAULT_DELTA, int(data.get("ell", 2)), None, f, P)
    delta = Fraction(str(data.get("delta", DEFAULT_DELTA)))
    d = int(data.get("d", 3 if kind == "codim2-axis" else 1))
    return BoundarySpec(kind, d, delta, int(data.get("ell", 1)), data.get("variant"), data.get("f"),
                        presentation)
