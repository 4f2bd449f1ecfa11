"""Dithered probabilistic shaping over the power-constrained AWGN channel.

The scheme: pick a lattice scaled so that sigma_eff * err_inv = scale holds
for the target error level, draw a shared dither t, transmit one sample of
the discrete Gaussian D_{scaled+t, sigma_s}, and decode by MMSE scaling
followed by closest-point search on the shifted lattice:

    x_hat = t + CP(scaled, alpha*y - t),  alpha = sigma_s^2/(sigma_s^2+sigma_w^2).

Error comparisons run in integer lattice coordinates, never on floats, so a
trial's error indicator is exact. In mod-B mode the comparison happens on
the quotient modulo B*Z^n, which the config guarantees is a sublattice of
the scaled coding lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionMismatch, InvalidParams, NonPositive
from .lattices import Lattice, closest_point, scale_lattice
from .measures import effective_noise_bounds, effective_noise_pdf  # noqa: F401
from .rng import RngStream
from .sampling import (
    check_nested,
    discrete_gaussian,
    sample_dither_discrete,
    sample_normal,
)

DITHER_MODES = ("none", "cont", "discrete")
PEAK_MODES = ("off", "zeroize", "modb")


@dataclass(frozen=True)
class ChannelParams:
    sigma_s2: float
    sigma_w2: float
    snr: float
    alpha: float
    sigma_eff2: float

    @property
    def sigma_s(self):
        return math.sqrt(self.sigma_s2)

    @property
    def sigma_w(self):
        return math.sqrt(self.sigma_w2)

    @property
    def sigma_eff(self):
        return math.sqrt(self.sigma_eff2)


def channel_params(sigma_s2, sigma_w2) -> ChannelParams:
    """Derive the MMSE coefficient and effective noise variance."""
    if not (sigma_s2 > 0 and sigma_w2 > 0):
        raise NonPositive("sigma_s2 and sigma_w2 must be positive")
    alpha = sigma_s2 / (sigma_s2 + sigma_w2)
    return ChannelParams(
        sigma_s2=float(sigma_s2),
        sigma_w2=float(sigma_w2),
        snr=sigma_s2 / sigma_w2,
        alpha=alpha,
        sigma_eff2=sigma_s2 * sigma_w2 / (sigma_s2 + sigma_w2),
    )


def normalize_scale(lat: Lattice, params: ChannelParams, eps, err_inv) -> float:
    """Scale making the effective noise escape the Voronoi cell w.p. ~eps.

    With err_inv an estimate of the inverse error function at eps, returns
    s = err_inv * sigma_eff, so sigma_eff * err_inv(scaled lattice) = s holds.
    """
    if not err_inv > 0:
        raise NonPositive("err_inv must be positive")
    return float(err_inv) * params.sigma_eff


@dataclass(frozen=True)
class CodecConfig:
    lattice: Lattice
    scale: float
    params: ChannelParams
    dither: str = "cont"
    dither_fine: Optional[Lattice] = None
    peak: str = "off"
    peak_budget: Optional[float] = None
    mod_b: Optional[float] = None

    @cached_property
    def scaled(self) -> Lattice:
        return scale_lattice(self.lattice, self.scale)

    @cached_property
    def modb_coords(self) -> Optional[np.ndarray]:
        """Integer matrix M with B*Z^n = scaled * M, for quotient comparisons."""
        if self.peak != "modb":
            return None
        m = np.linalg.inv(self.scaled.basis) * self.mod_b
        return np.rint(m).astype(np.int64)


def codec_config(lat: Lattice, scale, params: ChannelParams, dither="cont",
                 dither_fine=None, peak="off", peak_budget=None,
                 mod_b=None) -> CodecConfig:
    if not scale > 0:
        raise NonPositive("scale must be positive")
    if dither not in DITHER_MODES:
        raise InvalidParams(f"dither must be one of {DITHER_MODES}")
    if peak not in PEAK_MODES:
        raise InvalidParams(f"peak must be one of {PEAK_MODES}")
    cfg = CodecConfig(lattice=lat, scale=float(scale), params=params,
                      dither=dither, dither_fine=dither_fine, peak=peak,
                      peak_budget=peak_budget, mod_b=mod_b)
    if dither == "discrete":
        if dither_fine is None:
            raise InvalidParams("discrete dither needs the fine lattice")
        check_nested(cfg.scaled, dither_fine)
    if peak == "zeroize":
        if peak_budget is None or not peak_budget > 0:
            raise NonPositive("zeroize needs a positive power budget")
    if peak == "modb":
        if mod_b is None or not mod_b > 0:
            raise NonPositive("modb needs a positive modulus")
        bz = scale_lattice(Lattice(np.eye(lat.n)), mod_b)
        check_nested(bz, cfg.scaled)  # requires B*Z^n inside the code lattice
    return cfg


class Encoded(NamedTuple):
    x: np.ndarray  # the transmitted vector (after peak control)
    t: np.ndarray  # the dither, shared with the decoder
    coords: np.ndarray  # lattice coordinates: x_pre_peak = t + embed(coords)
    failure: bool  # zeroize tripped (counted as an error downstream)


class Decoded(NamedTuple):
    x: np.ndarray
    coords: np.ndarray


def draw_dither(config: CodecConfig, rng: RngStream) -> np.ndarray:
    n = config.lattice.n
    if config.dither == "none":
        return np.zeros(n)
    if config.dither == "cont":
        return sample_normal(config.params.sigma_s, n, rng)
    return sample_dither_discrete(config.scaled, config.dither_fine,
                                  config.params.sigma_s, rng)


def encode(config: CodecConfig, rng: RngStream) -> Encoded:
    """Draw the dither (stream child 0) and the signal (child 1)."""
    t = draw_dither(config, rng.child(0))
    spec = discrete_gaussian(config.scaled, t, config.params.sigma_s)
    u = rng.child(1).generator().random()
    idx = min(int(np.searchsorted(spec.cum, u, side="right")), len(spec.cum) - 1)
    coords = spec.coords[idx]
    x = spec.points[idx]
    failure = False
    if config.peak == "zeroize":
        if float(x @ x) > config.lattice.n * config.peak_budget:
            x = np.zeros_like(x)
            failure = True
    elif config.peak == "modb":
        x = mod_interval(x, config.mod_b)
    return Encoded(x=x, t=t, coords=coords, failure=failure)


def mod_interval(x, b):
    """Coordinate-wise representative in [-B/2, B/2)."""
    return (np.asarray(x, dtype=float) + b / 2) % b - b / 2


def transmit(config: CodecConfig, x, rng: RngStream) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w = sample_normal(config.params.sigma_w, x.shape[-1], rng,
                      trials=None if x.ndim == 1 else x.shape[0])
    return x + w


def decode(config: CodecConfig, t, y) -> Decoded:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape[-1] != config.lattice.n or y.shape[-1] != config.lattice.n:
        raise DimensionMismatch("dither/observation dimension mismatch")
    cp = closest_point(config.scaled, config.params.alpha * y - t)
    return Decoded(x=t + cp.point, coords=cp.coords)


def is_error(config: CodecConfig, sent: Encoded, got: Decoded) -> bool:
    """Exact error indicator on integer coordinates."""
    if sent.failure:
        return True
    return bool(coords_differ(config, got.coords - sent.coords))


def coords_differ(config: CodecConfig, diff) -> np.ndarray:
    """Vectorized: does each coordinate-difference row change the codeword?

    In modb mode a difference inside the B*Z^n sublattice is no error; the
    membership test is exact integer arithmetic.
    """
    diff = np.atleast_2d(np.asarray(diff, dtype=np.int64))
    if config.peak != "modb":
        return diff.any(axis=1) if diff.shape[0] > 1 else diff.any()
    m = config.modb_coords
    minv = np.linalg.inv(m.astype(float))
    k = np.rint(diff @ minv.T).astype(np.int64)
    exact = (k @ m.T == diff).all(axis=1)
    out = ~exact
    return out if out.shape[0] > 1 else out[0]


def transmission_trial(config: CodecConfig, rng: RngStream) -> dict:
    """One end-to-end trial: dither, encode, channel, decode, compare.

    Streams: child 0 dither, child 1 signal, child 2 noise.
    """
    enc = encode(config, rng)
    y = transmit(config, enc.x, rng.child(2))
    dec = decode(config, enc.t, y)
    return {
        "t": enc.t, "x": enc.x, "w": y - enc.x, "y": y, "x_hat": dec.x,
        "error": is_error(config, enc, dec),
        "power": float(enc.x @ enc.x) / config.lattice.n,
    }


def suggest_mod_b(sigma_s, n, eps_peak) -> float:
    """Modulus sized from the coordinate-tail union bound 2n*exp(-t^2/2).

    Solving 2n*exp(-t^2/2) = eps_peak gives t = sqrt(2 log(2n/eps_peak));
    the suggested modulus is B = sigma_s * t. Only the sqrt(log n) shape is
    forced; the proportionality constant is a free implementation choice.
    """
    if not (0 < eps_peak < 1):
        raise InvalidParams("eps_peak must be in (0,1)")
    return sigma_s * math.sqrt(2 * math.log(2 * n / eps_peak))
