"""Seeded random objects used by property checks and experiment scripts."""
from __future__ import annotations

import math

import numpy as np
from scipy.stats import unitary_group

from .states import AlphaFamily


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unit_vectors(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """``n`` Haar-random unit vectors in ``C^d``, one per row."""
    v = complex_gaussian(rng, (n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_product_vectors(rng: np.random.Generator, n: int, dims) -> np.ndarray:
    d_a, d_b = dims
    phi = random_unit_vectors(rng, n, d_a)
    chi = random_unit_vectors(rng, n, d_b)
    return np.einsum("ri,rj->rij", phi, chi).reshape(n, d_a * d_b)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


def random_alpha_family(rng: np.random.Generator, k_max: int = 6,
                        spread: float = 5.0, gap: float = 1.25) -> AlphaFamily:
    """Draw Σ coefficients mixing range-entangled and product-admitting cases.

    Half of the ``K >= 3`` draws set every middle coefficient to 1 (a product
    vector exists); the rest violate at least one middle condition. Violating
    coefficients are log-uniform with ``gap <= max(a, 1/a) <= spread`` so the
    range stays well separated from product vectors. The last coefficient is
    log-uniform in ``[1/spread, spread]``.
    """
    K = int(rng.integers(2, k_max + 1))

    def away() -> float:
        sign = rng.choice([-1.0, 1.0])
        return math.exp(sign * rng.uniform(math.log(gap), math.log(spread)))

    middle = [1.0] * (K - 2)
    if K > 2 and rng.random() < 0.5:
        middle = [1.0 if rng.random() < 0.3 else away() for _ in range(K - 2)]
        if all(x == 1.0 for x in middle):
            middle[int(rng.integers(K - 2))] = away()
    last = math.exp(rng.uniform(-math.log(spread), math.log(spread)))
    return AlphaFamily(K, tuple(middle + [last]))
