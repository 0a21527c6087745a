"""Gaussian processes constrained by linear PDEs with analytic coefficients and boundary conditions."""
from .boundary import BoundarySpec, build_boundary, double_drop, snake
from .diffalg import DiffAlgebraPresentation, make_presentation, presentation_from_dict, validate
from .gp import DataSet, GaussianProcess, NumericalError, Posterior, field_grid, posterior, pushforward, sample_prior
from .janet import AssumptionError, JanetBasis, janet_basis, janet_completion, multiplicative_variables
from .orderings import MonomialOrdering, degrevlex, elim_components, elim_partials, pot, top
from .ore import OperatorMatrix, OreAlgebra, OrePoly, parse_operator
from .parsing import ParseError
from .syzygy import intersect_parametrizations, left_kernel, parametrize, right_kernel

__all__ = [
    "BoundarySpec", "build_boundary", "double_drop", "snake",
    "DiffAlgebraPresentation", "make_presentation", "presentation_from_dict", "validate",
    "DataSet", "GaussianProcess", "NumericalError", "Posterior", "field_grid", "posterior", "pushforward",
    "sample_prior", "AssumptionError", "JanetBasis", "janet_basis", "janet_completion",
    "multiplicative_variables", "MonomialOrdering", "degrevlex", "elim_components", "elim_partials", "pot", "top",
    "OperatorMatrix", "OreAlgebra", "OrePoly", "parse_operator", "ParseError",
    "intersect_parametrizations", "left_kernel", "parametrize", "right_kernel",
]
