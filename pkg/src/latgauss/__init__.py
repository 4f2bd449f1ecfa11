"""Dithered probabilistic shaping over lattices.

Discrete Gaussian shaping on a dithered lattice coset, MMSE-scaled lattice
decoding, and seeded Monte Carlo suites that check the construction's
guarantees (sampling laws, power concentration, error bounds, converse)
at small dimension by exact enumeration plus confidence intervals.
"""

__version__ = "0.1.0"

from .errors import LatgaussError, UsageError
from .lattices import (
    Lattice,
    closest_point,
    dual,
    new_lattice,
    scale_lattice,
    standard_lattice,
)
from .rng import DEFAULT_SEED, RngStream

__all__ = [
    "DEFAULT_SEED",
    "Lattice",
    "LatgaussError",
    "RngStream",
    "UsageError",
    "__version__",
    "closest_point",
    "dual",
    "new_lattice",
    "scale_lattice",
    "standard_lattice",
]
