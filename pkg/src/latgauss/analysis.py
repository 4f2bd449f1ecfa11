"""Closed-form rate calculators and cross-checks against sampled quantities.

Finite-blocklength normal approximations, the smoothing-parameter sandwich
around the inverse error function, the dithering-rate bound, and the
normalized-second-moment comparator. The blocklength formulas deliberately
omit O(log n / n) correction terms; every report says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import InvalidParams, NonPositive
from .lattices import Lattice, dual, reduce_batch
from .measures import smoothing_parameter
from .montecarlo import CIEstimate, inverse_error_function, mean_ci, nvnr
from .rng import DEFAULT_SEED, RngStream

EXCLUDED_TERMS = "O(log n / n) corrections omitted"


def capacity(snr) -> float:
    """AWGN capacity (1/2) log(1 + snr), nats per dimension."""
    if not snr > 0:
        raise NonPositive("snr must be positive")
    return 0.5 * math.log1p(snr)


def dispersion(snr) -> float:
    """Channel dispersion (1/2)(1 - 1/(1+snr)^2), nats squared."""
    if not snr > 0:
        raise NonPositive("snr must be positive")
    return 0.5 * (1.0 - 1.0 / (1.0 + snr) ** 2)


def gaussian_tail(x) -> float:
    """Q(x): upper tail of the standard normal."""
    return 0.5 * float(special.erfc(x / math.sqrt(2.0)))


def q_inverse(p) -> float:
    """x with Q(x) = p, sharpened to |Q(x) - p| <= 1e-10.

    Rational inverse-CDF initial guess, then two Newton steps on Q itself
    (dQ/dx = -pdf), which squares the residual each time.
    """
    if not 0.0 < p < 1.0:
        raise InvalidParams("p must be in (0,1)")
    x = float(-special.ndtri(p))
    for _ in range(2):
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if pdf == 0.0:
            break
        x += (gaussian_tail(x) - p) / pdf
    return x


@dataclass(frozen=True)
class FiniteBlocklengthReport:
    capacity: float
    dispersion: float
    normal_approx_rate: float
    delta_eps_n: float
    theorem1_gap: Optional[float]
    intro_gap: float
    sigma: float
    excluded: str = EXCLUDED_TERMS


def max_nld(sigma) -> float:
    """Largest normalized log density supporting reliable unconstrained
    decoding at noise level sigma: (1/2) log(1/(2 pi e sigma^2))."""
    if not sigma > 0:
        raise NonPositive("sigma must be positive")
    return -0.5 * math.log(2.0 * math.pi * math.e * sigma**2)


def theorem1_gap(gamma, n) -> float:
    """Rate gap (1/2) log gamma + 2/sqrt(n) + 4/n of the shaping theorem."""
    if not gamma > 0 or not n >= 1:
        raise InvalidParams("need gamma > 0 and n >= 1")
    return 0.5 * math.log(gamma) + 2.0 / math.sqrt(n) + 4.0 / n


def finite_blocklength(snr, n, eps, gamma=None, sigma=None
                       ) -> FiniteBlocklengthReport:
    """Second-order rate quantities at blocklength n and error budget eps.

    `sigma` fixes the noise scale used for the unconstrained-setting NLD
    delta_eps_n; the default is the effective noise level of the MMSE
    channel at unit noise power, sigma_eff = sqrt(snr/(1+snr)), the level
    the shaped code lattice actually faces. Pass sigma explicitly for the
    raw-noise convention. All formulas drop O(log n / n) terms.
    """
    if not n >= 1:
        raise InvalidParams("n must be at least 1")
    if not 0.0 < eps <= 0.5:
        raise InvalidParams("eps must be in (0, 0.5]")
    c = capacity(snr)
    v = dispersion(snr)
    qi = q_inverse(eps)
    if sigma is None:
        sigma = math.sqrt(snr / (1.0 + snr))
    return FiniteBlocklengthReport(
        capacity=c,
        dispersion=v,
        normal_approx_rate=c - math.sqrt(v / n) * qi,
        delta_eps_n=max_nld(sigma) - math.sqrt(0.5 / n) * qi,
        theorem1_gap=None if gamma is None else theorem1_gap(gamma, n),
        intro_gap=(qi + math.sqrt(8.0)) / math.sqrt(2.0 * n),
        sigma=float(sigma),
    )


def dither_rate_bound(snr) -> dict:
    """Shared-randomness rate needed by the dithered scheme.

    max(0, (1/2)(1 - log(1+snr))) nats per use; from snr = e - 1 on the
    bound hits zero and no dither is necessary. The vanishing delta_n
    term is omitted.
    """
    if not snr > 0:
        raise NonPositive("snr must be positive")
    raw = 0.5 * (1.0 - math.log1p(snr))
    return {"bound": max(0.0, raw), "no_dither_needed": raw <= 0.0}


def phi(alpha) -> float:
    """Coefficient 1 - log(2 alpha e)/(2 alpha) in the entropy cap."""
    if not alpha > 0.5:
        raise InvalidParams("alpha must exceed 1/2")
    return 1.0 - math.log(2.0 * alpha * math.e) / (2.0 * alpha)


def cdlp_sandwich(lat: Lattice, eps, trials=400_000, tol=1e-3,
                  rng: RngStream = None) -> dict:
    """Smoothing-parameter sandwich around the inverse error function.

    eta_{eps/(1-eps)}(dual) <= err_inv_eps(lat) <= 2 eta_eps(dual); the
    middle term is Monte Carlo, so ok allows its CI-scale slack on both
    comparisons.
    """
    if not 0.0 < eps < 0.5:
        raise InvalidParams("eps must be in (0, 0.5)")
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    d = dual(lat)
    lower = smoothing_parameter(d, eps / (1.0 - eps)).s
    upper = 2.0 * smoothing_parameter(d, eps).s
    mid = inverse_error_function(lat, eps, trials=trials, tol=tol, rng=rng)
    slack = 3.0 * tol * mid
    ok = (lower - slack <= mid <= upper + slack)
    return {"lower": lower, "mid": mid, "upper": upper, "ok": ok}


def zamir_conjecture_bound(lat: Lattice, eps, nsm_trials=100_000,
                           rng: RngStream = None, err_trials=200_000,
                           tol=1e-3) -> dict:
    """Conjectured shaping gap (1/2) log(mu G) next to the proved one.

    G is the normalized second moment of the Voronoi cell, estimated from
    uniform cell samples (uniform parallelepiped points reduced to the
    cell); the CI must be consistent with G >= 1/(2 pi e). mu comes from
    the Monte Carlo inverse error function.
    """
    if nsm_trials < 10_000:
        raise InvalidParams("need at least 10^4 samples for G")
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    n = lat.n
    u = rng.child(0).generator().random((nsm_trials, n))
    cell = reduce_batch(lat, u @ lat.basis.T)
    sq = (cell**2).sum(axis=1) / (n * lat.volume ** (2.0 / n))
    g_ci = mean_ci(sq, seed=rng.seed)
    if g_ci.hi * 2.0 * math.pi * math.e < 1.0:
        raise InvalidParams(
            f"second-moment estimate {g_ci} contradicts G >= 1/(2 pi e)"
        )
    rep = nvnr(lat, eps, trials=err_trials, tol=tol, rng=rng.child(1))
    bound = 0.5 * math.log(rep["mu"] * g_ci.p_hat)
    return {
        "bound": bound,
        "gap_from_theorem1": theorem1_gap(rep["gamma"], n),
        "g": g_ci,
        "mu": rep["mu"],
        "gamma": rep["gamma"],
    }
