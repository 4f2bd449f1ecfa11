"""Gaussian measures restricted to lattice cosets.

The workhorse is a certified truncated theta sum: the Gaussian mass of a
coset is computed by enumerating every coset point inside a ball whose
radius is chosen from the exponential norm tail

    Pr[ ||X||^2 / (2 n sigma^2) >= t ] <= exp(-n t + (n/2) log(2 t e)),  t >= 1,

so the neglected tail is provably below the requested relative tolerance.
For shifted cosets the bound controls the tail relative to the centered sum;
the radius is enlarged by the certified ratio between the two masses, with a
conservative factor-two slack throughout. Sums are accumulated with exact
(fsum) summation after factoring out the largest exponent, which keeps tiny
masses meaningful and makes results independent of enumeration order.

On top of that primitive: the zero-point probability mass, exact entropy via
two independent routes (a mass/second-moment identity and a direct -sum p
log p), the smoothing parameter, flatness-factor brackets, the effective
noise density of the MMSE-scaled channel, and a Siegel-style mean check for
random mod-p lattices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, InternalMismatch, InvalidParams
from .lattices import (
    DEFAULT_ENUM_BUDGET,
    Lattice,
    dual,
    enumerate_coset,
    mod_lattice,
    reduce_batch,
    scale_lattice,
)


@dataclass(frozen=True)
class ThetaSum:
    """Certified truncated coset mass: sum of f_sigma over Lambda + shift."""

    value: float
    truncation_radius: float
    tail_bound: float  # certified relative error of the truncation
    points: int


@dataclass(frozen=True)
class CosetEnumeration:
    """Enumerated coset support with unnormalized Gaussian weights.

    weights[i] = exp(-(||x_i||^2 - shift_norm) / (2 sigma^2)) where
    shift_norm is the smallest squared norm over the support, so the largest
    weight is 1. log_raw_sum recovers log sum_i exp(-||x_i||^2 / 2 sigma^2).
    """

    coords: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    log_shift: float  # -min_exponent
    log_raw_sum: float
    truncation_radius: float
    tail_bound: float


@dataclass(frozen=True)
class FlatnessBracket:
    lower: float  # max over sampled cell points of |V f_sigma(Lambda+x) - 1|
    upper: float  # dual theta tail, a rigorous upper bound on the flatness
    samples: int


@dataclass(frozen=True)
class SmoothingResult:
    s: float
    eps: float
    residual: float  # |g(s) - eps|


def _tail_h(t):
    return -t + 0.5 * math.log(2 * math.e * t)


def _solve_tail_t(n, log_target):
    """Smallest t >= 1 with n * h(t) <= log_target (h strictly decreasing)."""
    if n * _tail_h(1.0) <= log_target:
        return 1.0
    lo, hi = 1.0, 2.0
    while n * _tail_h(hi) > log_target:
        hi *= 2.0
        if hi > 1e9:
            raise InvalidParams("tail target unreachable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if n * _tail_h(mid) > log_target:
            lo = mid
        else:
            hi = mid
    return hi


def _check_sigma(sigma):
    if not (sigma > 0 and np.isfinite(sigma)):
        raise InvalidParams("sigma must be positive and finite")


def gaussian_pdf(sigma, x):
    """Isotropic Gaussian density f_sigma evaluated at x (last axis = dim)."""
    _check_sigma(sigma)
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    norm2 = (x * x).sum(axis=-1)
    return np.exp(-norm2 / (2 * sigma**2)) / (2 * np.pi * sigma**2) ** (n / 2)


def enumerate_masses(
    lat: Lattice, shift, sigma, rel_tol=1e-9, budget=DEFAULT_ENUM_BUDGET
) -> CosetEnumeration:
    """Enumerate the coset support carrying all but rel_tol of its mass."""
    _check_sigma(sigma)
    if not (0 < rel_tol < 1):
        raise InvalidParams("rel_tol must be in (0, 1)")
    shift = np.asarray(shift, dtype=float)
    r = mod_lattice(lat, shift)
    rnorm2 = float(r @ r)
    if rnorm2 <= (1e-12 * sigma) ** 2:
        # centered: the tail bound applies directly
        log_target = math.log(rel_tol / 2)
        log_extra = 0.0
    else:
        # shifted: the bound controls the tail relative to the centered sum,
        # and the nearest-point weight alone lower-bounds the coset sum
        centered = enumerate_masses(lat, np.zeros(lat.n), sigma, rel_tol / 2, budget)
        log_m0 = -rnorm2 / (2 * sigma**2)
        log_rho_c = centered.log_raw_sum + math.log1p(rel_tol)
        log_target = math.log(rel_tol / 4) + log_m0 - log_rho_c
        log_extra = log_rho_c - log_m0
    t = _solve_tail_t(lat.n, log_target)
    radius = sigma * math.sqrt(2 * lat.n * t)
    coords, points = enumerate_coset(lat, r, radius, budget)
    if points.shape[0] == 0:
        raise InternalMismatch("certified ball contains no coset point")
    norm2 = (points * points).sum(axis=1)
    emin = float(norm2.min())
    weights = np.exp(-(norm2 - emin) / (2 * sigma**2))
    wsum = math.fsum(weights.tolist())
    log_raw = -emin / (2 * sigma**2) + math.log(wsum)
    tail = 2 * math.exp(min(lat.n * _tail_h(t) + log_extra, math.log(rel_tol / 2)))
    return CosetEnumeration(
        coords=coords,
        points=points,
        weights=weights,
        log_shift=-emin / (2 * sigma**2),
        log_raw_sum=log_raw,
        truncation_radius=radius,
        tail_bound=tail,
    )


def gaussian_mass(lat: Lattice, shift, sigma, rel_tol=1e-9) -> ThetaSum:
    """f_sigma(Lambda + shift) = sum over the coset of the Gaussian density."""
    data = enumerate_masses(lat, shift, sigma, rel_tol)
    logv = data.log_raw_sum - (lat.n / 2) * math.log(2 * math.pi * sigma**2)
    return ThetaSum(
        value=math.exp(logv),
        truncation_radius=data.truncation_radius,
        tail_bound=data.tail_bound,
        points=data.points.shape[0],
    )


def mass_zero(lat: Lattice, sigma, rel_tol=1e-9) -> float:
    """Probability that the centered coset Gaussian puts on the origin.

    P_0 = ((sqrt(2 pi) sigma)^n f_sigma(Lambda))^{-1} = 1 / raw theta sum.
    """
    data = enumerate_masses(lat, np.zeros(lat.n), sigma, rel_tol)
    return math.exp(-data.log_raw_sum)


def entropy_exact(lat: Lattice, shift, sigma, tol=1e-9) -> float:
    """Entropy (nats) of the discrete Gaussian on Lambda + shift.

    Computed two ways: log raw-mass plus half the relative second moment,
    and a direct -sum p log p over a strictly larger support. Disagreement
    beyond tol raises InternalMismatch (it means truncation was too coarse).
    """
    rel = min(tol, 1e-9) * 1e-2
    a = enumerate_masses(lat, shift, sigma, rel)
    p = a.weights / a.weights.sum()
    second = float((p * (a.points**2).sum(axis=1)).sum())
    h_ident = a.log_raw_sum + second / (2 * sigma**2)

    b_coords, b_points = enumerate_coset(
        lat, mod_lattice(lat, np.asarray(shift, dtype=float)),
        a.truncation_radius + 2 * sigma,
    )
    n2 = (b_points**2).sum(axis=1)
    w = np.exp(-(n2 - n2.min()) / (2 * sigma**2))
    q = w / w.sum()
    q = q[q > 0]
    h_direct = float(-(q * np.log(q)).sum())
    if abs(h_ident - h_direct) > tol:
        raise InternalMismatch(
            f"entropy routes disagree: {h_ident} vs {h_direct}"
        )
    return h_ident


def smoothing_parameter(lat: Lattice, eps, budget=DEFAULT_ENUM_BUDGET) -> SmoothingResult:
    """Unique s > 0 with g(s) = sum_{x in Lambda\\0} exp(-||s x||^2 / 2) = eps.

    Every evaluation of g re-enumerates its own certified support, so the
    residual reported at the root is trustworthy to the truncation level.
    """
    if not (0 < eps < 1):
        raise InvalidParams("eps must be in (0, 1)")
    lam1 = _shortest_norm(lat, budget)
    rel = max(1e-14, 1e-10 * eps)

    def g(s):
        data = enumerate_masses(lat, np.zeros(lat.n), 1.0 / s, rel, budget)
        n2 = (data.points**2).sum(axis=1)
        n2 = n2[n2 > 1e-18 * lam1**2]
        return float(math.fsum(np.exp(-s * s * n2 / 2).tolist()))

    # g(s) >= 2 exp(-s^2 lam1^2 / 2) (the +-shortest pair), so slightly below
    # sqrt(2 log(2/eps)) / lam1 the sum certifiably exceeds eps: a free lower
    # bracket that never needs an enumeration at small s.
    s_lo = 0.999 * math.sqrt(2 * math.log(2 / eps)) / lam1
    s_hi = s_lo * 1.05
    for _ in range(60):
        if g(s_hi) < eps:
            break
        s_hi *= 2
    else:
        raise BracketFailure("no sign change for the smoothing equation")
    lo, hi = s_lo, s_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > eps:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * mid:
            break
    s = 0.5 * (lo + hi)
    val = g(s)
    if not g(s * (1 + 1e-6)) < val * (1 + 1e-12) + 1e-300:
        raise InternalMismatch("smoothing sum is not decreasing at the root")
    return SmoothingResult(s=s, eps=eps, residual=abs(val - eps))


def _shortest_norm(lat, budget=DEFAULT_ENUM_BUDGET):
    """Exact length of a shortest nonzero vector."""
    r = float(np.linalg.norm(lat.basis, axis=0).min())
    while True:
        _, pts = enumerate_coset(lat, np.zeros(lat.n), r, budget)
        n2 = (pts**2).sum(axis=1)
        n2 = n2[n2 > 1e-18 * r * r]
        if n2.size:
            return math.sqrt(float(n2.min()))
        r *= 2  # pragma: no cover - the min column norm already suffices


def flatness_factor(lat: Lattice, sigma, samples=512, seed=0) -> FlatnessBracket:
    """Bracket for max_x |V f_sigma(Lambda + x) - 1| over the Voronoi cell.

    The upper bound is the dual theta tail sum_{y in Lambda*\\0}
    exp(-2 pi^2 sigma^2 ||y||^2) from the Fourier expansion. The lower bound
    maximizes the deviation over scrambled low-discrepancy points reduced to
    the cell, so lower <= true flatness <= upper.
    """
    _check_sigma(sigma)
    if samples < 1:
        raise InvalidParams("need at least one sample")
    dl = dual(lat)
    sig_d = 1.0 / (2 * math.pi * sigma)
    ddata = enumerate_masses(dl, np.zeros(lat.n), sig_d, 1e-12)
    dn2 = (ddata.points**2).sum(axis=1)
    upper = float(math.fsum(np.exp(-2 * np.pi**2 * sigma**2 * dn2[dn2 > 1e-18]).tolist()))
    upper += ddata.tail_bound * (1.0 + upper)  # keep it a true upper bound

    from scipy.stats import qmc

    sob = qmc.Sobol(d=lat.n, scramble=True, seed=seed)
    u = sob.random(samples)
    cell = reduce_batch(lat, u @ lat.basis.T)
    vals = batch_coset_masses(lat, cell, sigma, rel_tol=1e-9)
    lower = float(np.abs(lat.volume * vals - 1.0).max())
    return FlatnessBracket(lower=lower, upper=upper, samples=samples)


def batch_coset_stats(lat: Lattice, shifts, sigma, rel_tol=1e-9,
                      budget=DEFAULT_ENUM_BUDGET, chunk=256):
    """Per-row coset mass and exact conditional second moment.

    For each row r of `shifts` (must already lie in the Voronoi cell, see
    reduce_batch) returns f_sigma(Lambda + r) and E[||X||^2] for
    X ~ D_{Lambda+r,sigma}. One shared enumeration serves every row: the
    support ball is padded by the covering-radius bound, so every row keeps
    a certified truncation.
    """
    _check_sigma(sigma)
    shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
    if lat._fast is not None and lat._fast[0] == "Zn":
        return _zn_coset_stats(lat._fast[1], shifts, sigma, chunk)
    mu = lat.covering_bound
    centered = enumerate_masses(lat, np.zeros(lat.n), sigma, rel_tol / 2, budget)
    log_m0 = -(mu**2) / (2 * sigma**2)
    log_target = math.log(rel_tol / 4) + log_m0 - centered.log_raw_sum
    t = _solve_tail_t(lat.n, log_target)
    radius = sigma * math.sqrt(2 * lat.n * t) + mu
    _, spts = enumerate_coset(lat, np.zeros(lat.n), radius, budget)
    sn2 = (spts**2).sum(axis=1)
    mass = np.empty(shifts.shape[0])
    power = np.empty(shifts.shape[0])
    norm = (2 * math.pi * sigma**2) ** (lat.n / 2)
    chunk = max(1, min(chunk, (1 << 23) // max(1, len(sn2))))
    for a in range(0, shifts.shape[0], chunk):
        b = min(a + chunk, shifts.shape[0])
        r = shifts[a:b]
        rn2 = (r**2).sum(axis=1)[:, None]
        d2 = sn2[None, :] + 2.0 * (r @ spts.T) + rn2
        e = -d2 / (2 * sigma**2)
        emax = e.max(axis=1, keepdims=True)
        w = np.exp(e - emax)
        tot = w.sum(axis=1)
        mass[a:b] = np.exp(emax[:, 0]) * tot / norm
        power[a:b] = (w * d2).sum(axis=1) / tot
    return {"mass": mass, "power": power}


def _zn_coset_stats(c, shifts, sigma, chunk):
    """Factorized rows for scaled Z^n: mass is a product, power a sum.

    Windows of 20 sigma per coordinate leave a tail far below every
    supported rel_tol.
    """
    m, n = shifts.shape
    h = int(math.ceil((20.0 * sigma + 0.5 * c) / c)) + 1
    ks = np.arange(-h, h + 1) * c
    mass = np.empty(m)
    power = np.empty(m)
    log_norm = 0.5 * math.log(2 * math.pi * sigma**2)
    rows = max(1, min(m, (1 << 22) // (n * (2 * h + 1))))
    for a in range(0, m, rows):
        b = min(a + rows, m)
        red = shifts[a:b] - c * np.rint(shifts[a:b] / c)
        v = red[:, :, None] + ks
        e = -(v**2) / (2 * sigma**2)
        emax = e.max(axis=2, keepdims=True)
        w = np.exp(e - emax)
        mj = w.sum(axis=2)
        sj = (w * v**2).sum(axis=2) / mj
        logs = emax[:, :, 0] + np.log(mj)
        mass[a:b] = np.exp(logs.sum(axis=1) - n * log_norm)
        power[a:b] = sj.sum(axis=1)
    return {"mass": mass, "power": power}


def batch_coset_masses(lat: Lattice, shifts, sigma, rel_tol=1e-9,
                       budget=DEFAULT_ENUM_BUDGET, chunk=256):
    """f_sigma(Lambda + shift) per row; see batch_coset_stats."""
    return batch_coset_stats(lat, shifts, sigma, rel_tol, budget, chunk)["mass"]


def effective_noise_pdf(lat: Lattice, params, w, rel_tol=1e-9) -> float:
    """Density of the folded effective noise of the MMSE-scaled channel.

    g(w) = f_sigma_eff(w) * f_{sqrt(alpha) sigma_s}(Lambda + w) / f_sigma_s(Lambda),
    for a `params` object exposing alpha, sigma_eff2 and sigma_s2.
    """
    w = np.asarray(w, dtype=float)
    sig_eff = math.sqrt(params.sigma_eff2)
    sig_s = math.sqrt(params.sigma_s2)
    num = gaussian_mass(lat, w, math.sqrt(params.alpha) * sig_s, rel_tol).value
    den = gaussian_mass(lat, np.zeros(lat.n), sig_s, rel_tol).value
    return float(gaussian_pdf(sig_eff, w) * num / den)


def effective_noise_bounds(lat: Lattice, params, w, eps) -> dict:
    """Pointwise and tail bounds for the effective noise.

    pdf_upper: (1 + flatness upper at sqrt(alpha) sigma_s) * f_sigma_eff(w).
    tail_prob_bound: Pr[||W_eff|| > sqrt((1+eps) n) sigma_eff] bound
    exp(-(n/4)(eps^2 - eps^3)), for eps in (0, 1).
    """
    if not (0 < eps < 1):
        raise InvalidParams("eps must be in (0, 1)")
    w = np.asarray(w, dtype=float)
    sig_s = math.sqrt(params.sigma_s2)
    flat = flatness_factor(lat, math.sqrt(params.alpha) * sig_s, samples=2).upper
    pdf_upper = float((1.0 + flat) * gaussian_pdf(math.sqrt(params.sigma_eff2), w))
    tail = math.exp(-(lat.n / 4) * (eps**2 - eps**3))
    return {"pdf_upper": pdf_upper, "tail_prob_bound": tail}


def random_lattice_mean_check(n, volume, trials, sigma, rng, p=127, k=None) -> dict:
    """Mean of f_sigma(Lambda) over random mod-p lattices rescaled to `volume`.

    Compares against the Siegel-type prediction (2 pi sigma^2)^{-n/2} + 1/V
    (origin term plus average nonzero-point integral). Returns the empirical
    mean, its standard error and the prediction.
    """
    from .lattices import random_mod_p_lattice, standard_lattice

    if trials < 2:
        raise InvalidParams("need at least two trials")
    if k is None:
        k = max(1, n // 2)
    vals = np.empty(trials)
    for i in range(trials):
        if n == 1:
            lat = standard_lattice("Z")  # the 1-D case has a single shape
        else:
            lat = random_mod_p_lattice(n, k, p, rng.child(i))
        c = (volume / lat.volume) ** (1.0 / n)
        vals[i] = gaussian_mass(scale_lattice(lat, c), np.zeros(n), sigma).value
    predicted = (2 * math.pi * sigma**2) ** (-n / 2) + 1.0 / volume
    return {
        "empirical": float(vals.mean()),
        "stderr": float(vals.std(ddof=1) / math.sqrt(trials)),
        "predicted": float(predicted),
        "trials": trials,
    }
