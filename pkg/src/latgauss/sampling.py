"""Seeded random generation for the shaping pipeline.

Three sources: continuous Gaussian vectors, exact discrete Gaussian draws
over lattice cosets (inverse CDF on a certified truncated support), and the
two dither flavors (a plain Gaussian shift, and a discrete Gaussian on a
finer lattice reduced to the coarse Voronoi cell).

Every sampler is a pure function of (parameters, RngStream): calling twice
with the same stream reproduces the same draws. Callers that need fresh
randomness derive child streams; nothing here mutates shared state.

The batch coset sampler returns integer lattice coordinates alongside the
points. Downstream equality checks (decoded vs sent) compare coordinates,
which makes the error indicator exact instead of float-coincidental.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, NotNested
from .lattices import DEFAULT_ENUM_BUDGET, Lattice, closest_point, decode_batch
from .measures import enumerate_masses
from .rng import RngStream

DEFAULT_TAIL = 1e-12


@dataclass(frozen=True)
class DiscreteGaussianSpec:
    """Truncated discrete Gaussian D_{Lambda+shift,sigma}, ready to sample.

    Support is sorted by decreasing mass; cum is the inclusive cumulative
    probability, so inverse CDF is a single searchsorted. The enumerated
    support carries at least (1 - tail) of the full coset mass.
    """

    lattice: Lattice
    shift: np.ndarray
    sigma: float
    radius: float
    tail: float
    coords: np.ndarray  # (m, n) int64, X = shift + embed(coords)
    points: np.ndarray  # (m, n) float, the coset points themselves
    probs: np.ndarray
    cum: np.ndarray


def discrete_gaussian(lat: Lattice, shift, sigma, tail=DEFAULT_TAIL,
                      budget=DEFAULT_ENUM_BUDGET) -> DiscreteGaussianSpec:
    """Build the truncated renormalized D_{Lambda+shift,sigma}."""
    shift = np.asarray(shift, dtype=float)
    data = enumerate_masses(lat, shift, sigma, tail, budget)
    probs = data.weights / math.fsum(data.weights.tolist())
    order = np.argsort(-probs, kind="stable")
    probs = probs[order]
    cum = np.cumsum(probs)
    cum[-1] = 1.0  # guard the top against accumulated rounding
    # points were enumerated around the reduced shift; re-anchor coordinates
    # to the caller's shift so that X = shift + embed(coords) exactly
    anchor = closest_point(lat, shift).coords
    coords = data.coords[order] - anchor
    return DiscreteGaussianSpec(
        lattice=lat, shift=shift, sigma=float(sigma),
        radius=data.truncation_radius, tail=data.tail_bound,
        coords=coords, points=shift + lat.embed(coords),
        probs=probs, cum=cum,
    )


def sample_discrete_gaussian(spec: DiscreteGaussianSpec, rng: RngStream,
                             trials=None):
    """Exact categorical draw(s) from the truncated support.

    trials=None returns one point of shape (n,); otherwise (trials, n).
    """
    m = 1 if trials is None else int(trials)
    if m < 1:
        raise InvalidParams("trials must be positive")
    u = rng.generator().random(m)
    idx = np.searchsorted(spec.cum, u, side="right")
    idx = np.minimum(idx, len(spec.cum) - 1)
    out = spec.points[idx]
    return out[0] if trials is None else out


def sample_normal(sigma, n, rng: RngStream, trials=None):
    """Mean-zero normal vector(s) with per-coordinate deviation sigma."""
    if not (sigma > 0 and np.isfinite(sigma)):
        raise InvalidParams("sigma must be positive and finite")
    m = 1 if trials is None else int(trials)
    if m < 1 or n < 1:
        raise InvalidParams("need positive dimensions")
    x = rng.generator().standard_normal((m, n)) * sigma
    return x[0] if trials is None else x


def sample_dither_continuous(sigma_s, n, rng: RngStream, lat: Lattice = None,
                             trials=None):
    """Gaussian dither T ~ N(0, sigma_s^2 I); reduced mod lat when given.

    Reduction subtracts lattice vectors, so both modes land in the same
    coset and are interchangeable wherever only the coset matters.
    """
    t = sample_normal(sigma_s, n, rng, trials)
    if lat is None:
        return t
    from .lattices import reduce_batch

    red = reduce_batch(lat, np.atleast_2d(t))
    return red[0] if trials is None else red


def check_nested(coarse: Lattice, fine: Lattice, tol=1e-9):
    """Require coarse to be a sublattice of fine."""
    if coarse.n != fine.n:
        raise NotNested("dimension mismatch")
    m = np.linalg.inv(fine.basis) @ coarse.basis
    if not np.allclose(m, np.rint(m), atol=tol):
        raise NotNested("coarse lattice is not contained in the fine one")
    return np.rint(m).astype(np.int64)


def sample_dither_discrete(coarse: Lattice, fine: Lattice, sigma_s,
                           rng: RngStream, trials=None, tail=DEFAULT_TAIL):
    """T ~ D_{fine,sigma_s} reduced mod coarse."""
    check_nested(coarse, fine)
    spec = discrete_gaussian(fine, np.zeros(fine.n), sigma_s, tail)
    t = sample_discrete_gaussian(spec, rng, trials)
    from .lattices import reduce_batch

    red = reduce_batch(coarse, np.atleast_2d(t))
    return red[0] if trials is None else red


def batch_coset_sample(lat: Lattice, shifts, sigma, rng: RngStream,
                       rel_tol=1e-9, budget=DEFAULT_ENUM_BUDGET, chunk=256):
    """One draw X_i ~ D_{Lambda+shifts_i, sigma} per row of shifts.

    Returns (points, coords) with points = shifts + embed(coords) exactly.
    A single shared enumeration (padded by the covering bound) supports all
    rows; each row keeps a certified truncation of at most rel_tol mass.
    Coordinate-wise factorization handles scaled-Z lattices directly.
    """
    shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
    m = shifts.shape[0]
    if shifts.shape[1] != lat.n:
        raise InvalidParams("shift dimension mismatch")
    u = rng.generator().random((m, lat.n) if _is_zn(lat) else m)
    if _is_zn(lat):
        coords = _zn_rows(lat, shifts, sigma, rel_tol, u)
        return shifts + lat.embed(coords), coords

    anchors = decode_batch(lat, shifts)
    red = shifts - lat.embed(anchors)
    from .measures import _solve_tail_t

    mu = lat.covering_bound
    centered = enumerate_masses(lat, np.zeros(lat.n), sigma, rel_tol / 2, budget)
    log_target = math.log(rel_tol / 4) - mu**2 / (2 * sigma**2) - centered.log_raw_sum
    t = _solve_tail_t(lat.n, log_target)
    radius = sigma * math.sqrt(2 * lat.n * t) + mu
    from .lattices import enumerate_coset

    scoords, spts = enumerate_coset(lat, np.zeros(lat.n), radius, budget)
    sn2 = (spts**2).sum(axis=1)
    coords = np.empty((m, lat.n), dtype=np.int64)
    # keep the per-chunk distance matrix near 8M entries
    chunk = max(1, min(chunk, (1 << 23) // max(1, len(sn2))))
    for a in range(0, m, chunk):
        b = min(a + chunk, m)
        r = red[a:b]
        d2 = sn2[None, :] + 2.0 * (r @ spts.T) + (r**2).sum(axis=1)[:, None]
        e = np.exp(-(d2 - d2.min(axis=1, keepdims=True)) / (2 * sigma**2))
        cs = np.cumsum(e, axis=1)
        target = u[a:b] * cs[:, -1]
        idx = (cs < target[:, None]).sum(axis=1)
        coords[a:b] = scoords[idx] - anchors[a:b]
    return shifts + lat.embed(coords), coords


def _is_zn(lat):
    return lat._fast is not None and lat._fast[0] == "Zn"


def _zn_rows(lat, shifts, sigma, rel_tol, u):
    """Per-coordinate exact sampling for c*Z^n: the coset factorizes."""
    from .measures import _solve_tail_t

    c = lat._fast[1]
    n = lat.n
    k0 = int(math.ceil(20 * sigma / c)) + 2
    rho_c = float(np.exp(-(np.arange(-k0, k0 + 1) * c) ** 2 / (2 * sigma**2)).sum())
    t = _solve_tail_t(
        1,
        math.log(rel_tol / (4 * n)) - (c / 2) ** 2 / (2 * sigma**2) - math.log(rho_c),
    )
    radius = sigma * math.sqrt(2 * t)
    half = int(math.ceil((radius + c / 2) / c))
    base = -np.rint(shifts / c)  # (m, n): nearest coset point per coordinate
    offs = np.arange(-half, half + 1)  # (2K+1,)
    vals = (base[..., None] + offs) * c + shifts[..., None]
    w = np.exp(-(vals**2 - (vals**2).min(axis=-1, keepdims=True)) / (2 * sigma**2))
    cs = np.cumsum(w, axis=-1)
    target = u[..., None] * cs[..., -1:]
    idx = (cs < target).sum(axis=-1)
    return (base + offs[idx]).astype(np.int64)
