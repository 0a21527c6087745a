"""Random operators and monomials shared by several test modules."""
from __future__ import annotations

import itertools
import random

from weylgp.ore import OreAlgebra, OrePoly


def exponent_vectors(n: int, max_deg: int):
    """All exponent vectors of length ``n`` with total degree ``<= max_deg``."""
    for deg in range(max_deg + 1):
        for combo in itertools.combinations_with_replacement(range(n), deg):
            v = [0] * n
            for i in combo:
                v[i] += 1
            yield tuple(v)


def random_poly(ring: OreAlgebra, rng: random.Random, max_deg: int = 3, n_terms: int = 3,
                rank: int = 1, coeff_range: int = 5) -> OrePoly:
    n = ring.r + ring.d
    terms = {}
    for _ in range(n_terms):
        deg = rng.randint(0, max_deg)
        v = [0] * n
        for _ in range(deg):
            v[rng.randrange(n)] += 1
        k = rng.randrange(rank)
        m = (k,) + tuple(v[ring.r:]) + tuple(v[:ring.r])
        c = rng.randint(-coeff_range, coeff_range)
        if c:
            terms[m] = terms.get(m, 0) + c
    terms = {m: c for m, c in terms.items() if c}
    return OrePoly(ring, terms, rank)
