"""Stock presentations and generator sets shipped with the package."""
from __future__ import annotations

from dataclasses import dataclass

from .boundary import double_drop_presentation, snake_presentation
from .diffalg import DiffAlgebraPresentation, make_presentation
from .orderings import MonomialOrdering, degrevlex, elim_partials, pot, top
from .ore import OreAlgebra, OrePoly

__all__ = [
    "gaussian_bump_presentation", "weyl_presentation", "polynomial_presentation", "PRESENTATIONS",
    "GeneratorSet", "janet_generator_sets", "double_drop_presentation", "snake_presentation",
]


def gaussian_bump_presentation() -> DiffAlgebraPresentation:
    """``Q{x, y, exp(x^2+y^2-1)}`` with ``delta_1 F_3 = 2 F_1 F_3``, ``delta_2 F_3 = 2 F_2 F_3``."""
    return make_presentation(["x", "y", "E"], ["dx", "dy"],
                             [["1", "0"], ["0", "1"], ["2*x*E", "2*y*E"]],
                             ["x", "y", "exp(x^2 + y^2 - 1)"], ["x", "y"])


def weyl_presentation(coords=("x", "y")) -> DiffAlgebraPresentation:
    """Constant coefficients: ``r = 0``."""
    return make_presentation([], ["d" + c for c in coords], [], [], list(coords))


def polynomial_presentation(coords=("x", "y")) -> DiffAlgebraPresentation:
    """Polynomial coefficients ``Q[x_1..x_d]`` (the classical Weyl algebra)."""
    d = len(coords)
    table = [["1" if i == j else "0" for j in range(d)] for i in range(d)]
    return make_presentation(list(coords), ["d" + c for c in coords], table, list(coords), list(coords))


PRESENTATIONS = {
    "gaussian-bump": gaussian_bump_presentation,
    "weyl-2d": weyl_presentation,
    "polynomial-2d": polynomial_presentation,
    "double-drop": double_drop_presentation,
    "snake": snake_presentation,
}


@dataclass
class GeneratorSet:
    name: str
    ring: OreAlgebra
    generators: list[OrePoly]
    ordering: MonomialOrdering


def _scalars(ring: OreAlgebra, texts) -> list[OrePoly]:
    return [ring.parse(t) for t in texts]


def _rows(ring: OreAlgebra, rows) -> list[OrePoly]:
    return [ring.vector([ring.parse(t) for t in row]) for row in rows]


def janet_generator_sets() -> list[GeneratorSet]:
    """Ten generator sets covering scalar ideals and submodules under several orderings."""
    W = OreAlgebra(weyl_presentation())
    W3 = OreAlgebra(weyl_presentation(("x", "y", "z")))
    A = OreAlgebra(polynomial_presentation())
    G = OreAlgebra(gaussian_bump_presentation())
    D = OreAlgebra(double_drop_presentation())
    return [
        GeneratorSet("partials", W, _scalars(W, ["dx", "dy"]), degrevlex()),
        GeneratorSet("heat-3d", W3, _scalars(W3, ["dx*dy - dz", "dy^2 - dx"]), degrevlex()),
        GeneratorSet("rotation", A, _scalars(A, ["x*dy - y*dx"]), degrevlex()),
        GeneratorSet("euler-laplace", A, _scalars(A, ["x*dx + y*dy - 2", "dx^2 + dy^2"]), degrevlex()),
        GeneratorSet("airy-elim", A, _scalars(A, ["dx^2 - x*dy", "dy^2"]), elim_partials()),
        GeneratorSet("gaussian-bump", G, _scalars(G, ["E*dx - x", "dy^2 + E"]), degrevlex()),
        GeneratorSet("double-drop", D, _scalars(D, ["dx + s", "c*dy - y"]), degrevlex()),
        GeneratorSet("divergence-module", W, _rows(W, [["dx", "dy"], ["dy", "-dx"]]), top()),
        GeneratorSet("augmented-curl", A, _rows(A, [["dy", "1", "0"], ["-dx", "0", "1"]]), pot()),
        GeneratorSet("boundary-module", D,
                     _rows(D, [["dy", "y^2 - s^4", "0"], ["-dx", "0", "y^2 - s^4"]]), top()),
    ]
