"""Seeded statistical verification harness.

Estimators for the quantities the closed forms cannot reach (Voronoi escape
probabilities, the inverse error function, per-dither error rates) plus the
verification suites that check the distributional lemmas and the end-to-end
theorem at desk scale.

Conventions:
 - proportions get two-sided Clopper-Pearson 99% intervals; means get
   normal-approximation 99% intervals, optionally widened by a certified
   numeric tolerance when the estimand itself is computed by truncation;
 - every routine takes an RngStream and derives child streams with fixed
   indices, so results are pure functions of (inputs, seed);
 - a "pass" compares a confidence bound against a proved inequality, never
   a point estimate against a point estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .codec import (
    CodecConfig,
    channel_params,
    codec_config,
    coords_differ,
    mod_interval,
)
from .errors import InternalMismatch, InvalidParams, ResolutionExceeded
from .lattices import (
    Lattice,
    decode_batch,
    enumerate_coset,
    reduce_batch,
    scale_lattice,
    standard_lattice,
)
from .measures import batch_coset_stats, entropy_exact, enumerate_masses, mass_zero
from .rng import DEFAULT_SEED, RngStream
from .sampling import (
    batch_coset_sample,
    discrete_gaussian,
    sample_dither_discrete,
    sample_normal,
)

Z99 = 2.5758293035489004  # two-sided 99% normal quantile
TWO_PI_E = 2 * math.pi * math.e


@dataclass(frozen=True)
class CIEstimate:
    p_hat: float
    lo: float
    hi: float
    trials: int
    seed: int


@dataclass(frozen=True)
class DitherAudit:
    """Per-dither measurements against the four goodness events.

    Flags: a decoding error (CI upper end vs 6 eps), b conditional power
    (exact, within n +- 4 sqrt(n) in sigma_s^2 units), c entropy rate
    (exact, vs capacity minus the modulation-loss gap), d coset mass
    (certified, vs e^-4 over the cell volume). avg_power is exact, so its
    interval is degenerate.
    """

    t: np.ndarray
    err_rate: CIEstimate
    avg_power: CIEstimate
    mass: float
    rate: float
    pass_a: bool
    pass_b: bool
    pass_c: bool
    pass_d: bool

    @property
    def all_pass(self):
        return self.pass_a and self.pass_b and self.pass_c and self.pass_d


@dataclass(frozen=True)
class ConverseReport:
    p0: float
    entropy_rate: float
    entropy_upper: float
    p_err: CIEstimate
    half_gap: float
    snr: float
    converse_applies: bool
    entropy_ok: bool
    error_ok: bool


def proportion_ci(successes, trials, seed=0) -> CIEstimate:
    """Two-sided 99% Clopper-Pearson interval."""
    k, n = int(successes), int(trials)
    if not 0 <= k <= n or n < 1:
        raise InvalidParams("need 0 <= successes <= trials")
    lo = 0.0 if k == 0 else float(stats.beta.ppf(0.005, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(0.995, k + 1, n - k))
    return CIEstimate(p_hat=k / n, lo=lo, hi=hi, trials=n, seed=int(seed))


def mean_ci(values, seed=0, pad=0.0) -> CIEstimate:
    """99% normal-approximation interval, widened by a numeric pad."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise InvalidParams("need at least two values")
    m = float(values.mean())
    half = Z99 * float(values.std(ddof=1)) / math.sqrt(n) + pad
    return CIEstimate(p_hat=m, lo=m - half, hi=m + half, trials=n, seed=int(seed))


def _escape_count(lat, points):
    c = decode_batch(lat, points)
    return np.asarray(c).reshape(points.shape[0], -1).any(axis=1)


def voronoi_escape(lat: Lattice, sigma, trials, rng: RngStream,
                   chunk=1 << 17) -> CIEstimate:
    """Pr[sigma * Z escapes the Voronoi cell], Z standard normal."""
    if trials < 100:
        raise InvalidParams("need at least 100 trials")
    k = 0
    done = 0
    i = 0
    while done < trials:
        m = min(chunk, trials - done)
        z = sample_normal(sigma, lat.n, rng.child(i), trials=m)
        k += int(_escape_count(lat, z).sum())
        done += m
        i += 1
    return proportion_ci(k, trials, seed=rng.seed)


def zn_err_inv(n, eps, scale=1.0):
    """Closed-form inverse error function for scale * Z^n."""
    p = (1.0 - (1.0 - eps) ** (1.0 / n)) / 2.0
    return 2.0 * float(stats.norm.isf(p)) / scale


def _facet_candidates(lat):
    """Nonzero lattice vectors covering all Voronoi facet normals.

    Every facet vector v satisfies ||v|| <= 2 * covering radius, so the
    ball of twice the covering bound is a safe superset; extra vectors are
    harmless because their half-space constraints are implied.
    """
    coords, pts = enumerate_coset(lat, np.zeros(lat.n),
                                  2.0 * lat.covering_bound * (1 + 1e-9))
    keep = (pts**2).sum(axis=1) > 1e-18
    return pts[keep]


def _critical_scales(lat: Lattice, z):
    """Per-row smallest s such that the row lies inside V(s * Lattice).

    A point z sits outside V(s Lambda) iff 2<z,v> > s ||v||^2 for some
    facet vector v, so the critical scale is max_v 2<z,v>/||v||^2. Closed
    forms cover the rounding families (facets are the unit vectors for
    Z^n, the norm-sqrt(2) roots for D_n with n <= 4, the 240 roots for
    E8); other lattices get an explicit candidate set.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    fam = lat._fast
    if fam is not None:
        name, c = fam
        a = np.abs(z)
        if name == "Zn":
            return 2.0 * a.max(axis=1) / c
        if name == "Dn" and lat.n <= 4:
            part = np.partition(a, lat.n - 2, axis=1)
            return (part[:, -1] + part[:, -2]) / c
        if name == "E8":
            part = np.partition(a, 6, axis=1)
            t1 = part[:, -1] + part[:, -2]
            m = a.sum(axis=1)
            odd = (z < 0).sum(axis=1) % 2 == 1
            t2 = 0.5 * (m - 2 * a.min(axis=1) * odd)
            return np.maximum(t1, t2) / c
    cand = _facet_candidates(lat)
    norms = (cand**2).sum(axis=1)
    out = np.empty(z.shape[0])
    step = max(1, (1 << 22) // max(1, cand.shape[0]))
    for a in range(0, z.shape[0], step):
        b = min(a + step, z.shape[0])
        out[a:b] = (2.0 * (z[a:b] @ cand.T) / norms).max(axis=1)
    return out


def inverse_error_function(lat: Lattice, eps, trials=200_000, tol=1e-3,
                           rng: RngStream = None, max_trials=None) -> float:
    """Smallest s with Pr[N(0,I) escapes V(s Lambda)] <= eps.

    Each noise draw has a critical scale below which it escapes, so the
    target is the (1-eps) quantile of the critical-scale distribution. The
    estimate is the empirical quantile with a distribution-free
    order-statistic 99% interval; the sample is grown (x4, capped at 1024x
    the initial budget) until the interval is relatively narrower than
    tol. If the cap cannot separate that well, raises ResolutionExceeded
    rather than guessing. For scaled Z^n the closed form must agree within
    5*tol.
    """
    if not (0 < eps <= 0.5):
        raise InvalidParams("eps must be in (0, 0.5]")
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    if max_trials is None:
        max_trials = trials * 1024
    n = trials
    rung = 0
    chunk = 1 << 20
    while True:
        s = np.empty(n)
        done = 0
        ci = 0
        while done < n:
            m = min(chunk, n - done)
            z = sample_normal(1.0, lat.n, rng.child(rung * 4096 + ci), trials=m)
            s[done:done + m] = _critical_scales(lat, z)
            done += m
            ci += 1
        k = math.ceil((1.0 - eps) * n)
        d = math.ceil(Z99 * math.sqrt(n * eps * (1.0 - eps))) + 1
        if k - d >= 1 and k + d <= n:
            idx = [k - d - 1, k - 1, k + d - 1]
            part = np.partition(s, idx)
            lo, q, hi = part[idx[0]], part[idx[1]], part[idx[2]]
            if hi - lo <= tol * q:
                if lat._fast is not None and lat._fast[0] == "Zn":
                    closed = zn_err_inv(lat.n, eps, lat._fast[1])
                    if abs(q - closed) > 5 * tol * closed:
                        raise InternalMismatch(
                            f"quantile {q} vs closed form {closed} for scaled Z^n"
                        )
                return float(q)
        if n >= max_trials:
            raise ResolutionExceeded(
                "order-statistic interval cannot reach tol at the trial cap"
            )
        n = min(4 * n, max_trials)
        rung += 1


def nvnr(lat: Lattice, eps, trials=200_000, tol=1e-3, rng: RngStream = None) -> dict:
    """Normalized volume-to-noise ratio mu and modulation loss gamma."""
    err_inv = inverse_error_function(lat, eps, trials, tol, rng)
    mu = err_inv**2 * lat.volume ** (2.0 / lat.n)
    return {"err_inv": err_inv, "mu": mu, "gamma": mu / TWO_PI_E}


def _exact_coset_profile(scaled, t, sigma_s, rel=1e-11):
    """Certified mass, exact conditional power and entropy for one dither."""
    data = enumerate_masses(scaled, t, sigma_s, rel)
    w = data.weights / data.weights.sum()
    power = float((w * (data.points**2).sum(axis=1)).sum())
    log_mass = data.log_raw_sum - (scaled.n / 2) * math.log(2 * math.pi * sigma_s**2)
    entropy = data.log_raw_sum + power / (2 * sigma_s**2)
    return math.exp(log_mass), power, entropy, data


def dither_audit(config: CodecConfig, t, eps, trials, rng: RngStream) -> DitherAudit:
    """Measure one dither against the four goodness events."""
    scaled = config.scaled
    p = config.params
    n = scaled.n
    t = np.asarray(t, dtype=float)
    mass, power, entropy, data = _exact_coset_profile(scaled, t, p.sigma_s)

    spec = discrete_gaussian(scaled, t, p.sigma_s)
    u = rng.child(0).generator().random(trials)
    idx = np.minimum(np.searchsorted(spec.cum, u, side="right"), len(spec.cum) - 1)
    x = spec.points[idx]
    w = sample_normal(p.sigma_w, n, rng.child(1), trials=trials)
    chat = decode_batch(scaled, p.alpha * (x + w) - t)
    errs = int((chat != spec.coords[idx]).any(axis=1).sum())
    err_ci = proportion_ci(errs, trials, seed=rng.seed)

    err_inv = config.scale / p.sigma_eff
    gamma = err_inv**2 * config.lattice.volume ** (2.0 / n) / TWO_PI_E
    capacity = 0.5 * math.log1p(p.snr)
    gap = 0.5 * math.log(gamma) + 2 / math.sqrt(n) + 4 / n
    rate = entropy / n
    rel_power = power / p.sigma_s2
    norm_power = rel_power / n
    return DitherAudit(
        t=t,
        err_rate=err_ci,
        avg_power=CIEstimate(p_hat=norm_power, lo=norm_power, hi=norm_power,
                             trials=0, seed=rng.seed),
        mass=mass,
        rate=rate,
        pass_a=err_ci.hi <= 6 * eps,
        pass_b=abs(rel_power - n) <= 4 * math.sqrt(n),
        pass_c=rate >= capacity - gap,
        pass_d=mass >= math.exp(-4.0) / scaled.volume,
    )


def theorem1_suite(lat: Lattice, eps, snr, dithers=100, trials=2000,
                   rng: RngStream = None, err_inv=None, tol=1e-3) -> dict:
    """Audit a population of continuous dithers against all four events.

    The shaping theorem promises a pass fraction of at least one half over
    the dither measure; the suite compares against 0.5 minus three binomial
    standard errors.
    """
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    params = channel_params(1.0, 1.0 / snr)
    if err_inv is None:
        err_inv = inverse_error_function(lat, eps, tol=tol, rng=rng.child(0))
    scale = err_inv * params.sigma_eff
    config = codec_config(lat, scale, params, dither="cont")
    audits = []
    for i in range(dithers):
        t = sample_normal(params.sigma_s, lat.n, rng.child(1000 + i))
        audits.append(dither_audit(config, t, eps, trials, rng.child(2000 + i)))
    frac = sum(a.all_pass for a in audits) / dithers
    threshold = 0.5 - 3 * math.sqrt(0.25 / dithers)
    return {
        "fraction": frac,
        "threshold": threshold,
        "margin": frac - threshold,
        "pass": frac >= threshold,
        "err_inv": err_inv,
        "scale": scale,
        "flag_fractions": {
            "a": sum(a.pass_a for a in audits) / dithers,
            "b": sum(a.pass_b for a in audits) / dithers,
            "c": sum(a.pass_c for a in audits) / dithers,
            "d": sum(a.pass_d for a in audits) / dithers,
        },
        "audits": audits,
    }


def negative_moment_check(lat: Lattice, sigma, dithers, rng: RngStream) -> CIEstimate:
    """Mean of 1/f_sigma(Lambda+T) over Gaussian dithers; covers V(Lambda).

    The reciprocal masses are certified to a relative 1e-13, and the CI is
    widened by that certified tolerance so near-deterministic cases (flat
    lattices, where the sample variance collapses) stay honest.
    """
    if dithers < 100:
        raise InvalidParams("need at least 100 dithers")
    t = sample_normal(sigma, lat.n, rng.child(0), trials=dithers)
    rel = 1e-13
    f = batch_coset_stats(lat, reduce_batch(lat, t), sigma, rel_tol=rel)["mass"]
    vals = 1.0 / f
    pad = float(vals.mean()) * rel * 4
    return mean_ci(vals, seed=rng.seed, pad=pad)


def chernoff_power_check(lat: Lattice, sigma_s, eps, dithers,
                         rng: RngStream) -> dict:
    """Tails of the exact conditional power over Gaussian dithers.

    Compares Pr_T[E[||X/sigma_s||^2 | T] >= (1+eps) n] against
    exp(-(eps^2/4 - eps^3/6) n) and the matching lower tail against
    exp(-(eps^2/4 + eps^3/6) n).
    """
    if not (0 < eps < 1):
        raise InvalidParams("eps must be in (0,1)")
    t = sample_normal(sigma_s, lat.n, rng.child(0), trials=dithers)
    power = batch_coset_stats(lat, reduce_batch(lat, t), sigma_s,
                              rel_tol=1e-11)["power"] / sigma_s**2
    n = lat.n
    hi_ct = int((power >= (1 + eps) * n).sum())
    lo_ct = int((power <= (1 - eps) * n).sum())
    bound_hi = math.exp(-(eps**2 / 4 - eps**3 / 6) * n)
    bound_lo = math.exp(-(eps**2 / 4 + eps**3 / 6) * n)
    upper = proportion_ci(hi_ct, dithers, seed=rng.seed)
    lower = proportion_ci(lo_ct, dithers, seed=rng.seed)
    return {
        "upper": upper, "bound_upper": bound_hi,
        "lower": lower, "bound_lower": bound_lo,
        "pass": upper.lo <= bound_hi and lower.lo <= bound_lo,
    }


def run_trials(config: CodecConfig, t, rng: RngStream,
               compare_escape=False) -> dict:
    """Vectorized end-to-end trials, one per dither row of t.

    Streams: child 0 signal draw, child 1 channel noise. Error indicators
    are integer-exact. With compare_escape (peak control off only) also
    decodes the effective noise and counts disagreements with the error
    indicator; the decoder errs exactly when the effective noise escapes.
    """
    scaled = config.scaled
    p = config.params
    t = np.atleast_2d(np.asarray(t, dtype=float))
    m = t.shape[0]
    x, c = batch_coset_sample(scaled, t, p.sigma_s, rng.child(0))
    failure = np.zeros(m, dtype=bool)
    x_sent = x
    if config.peak == "zeroize":
        failure = (x**2).sum(axis=1) > scaled.n * config.peak_budget
        x_sent = np.where(failure[:, None], 0.0, x)
    elif config.peak == "modb":
        x_sent = mod_interval(x, config.mod_b)
    w = sample_normal(p.sigma_w, scaled.n, rng.child(1), trials=m)
    y = x_sent + w
    chat = decode_batch(scaled, p.alpha * y - t)
    err = np.atleast_1d(coords_differ(config, chat - c)) | failure
    out = {
        "errors": int(err.sum()),
        "err": err,
        "p_err": proportion_ci(int(err.sum()), m, seed=rng.seed),
        "avg_power": float((x_sent**2).sum(axis=1).mean()) / scaled.n,
        "failures": int(failure.sum()),
    }
    if compare_escape:
        if config.peak != "off":
            raise InvalidParams("escape comparison needs peak control off")
        w_eff = (p.alpha - 1.0) * x + p.alpha * w
        esc = _escape_count(scaled, w_eff)
        out["escapes"] = int(esc.sum())
        out["mismatches"] = int((esc != err).sum())
    return out


def transmission_experiment(config: CodecConfig, trials, rng: RngStream,
                            compare_escape=False, keep_err=False) -> dict:
    """Draw per-trial dithers by config mode, then run the trial engine.

    Also reports a rate proxy: the exact per-dither entropy rate averaged
    over the first few dithers (they are exchangeable). keep_err retains
    the per-trial indicator array for callers that log trial by trial.
    """
    n = config.lattice.n
    if config.dither == "none":
        t = np.zeros((trials, n))
    elif config.dither == "cont":
        t = sample_normal(config.params.sigma_s, n, rng.child(100), trials=trials)
    else:
        t = sample_dither_discrete(config.scaled, config.dither_fine,
                                   config.params.sigma_s, rng.child(100),
                                   trials=trials)
    out = run_trials(config, t, rng, compare_escape=compare_escape)
    k = 1 if config.dither == "none" else min(8, trials)
    rates = [
        _exact_coset_profile(config.scaled, t[i], config.params.sigma_s)[2] / n
        for i in range(k)
    ]
    out["rate_proxy"] = float(np.mean(rates))
    if not keep_err:
        del out["err"]
    return out


def markov_error_suite(lat: Lattice, eps, snr, gammas=(2.0, 6.0), dithers=500,
                       trials=2000, rng: RngStream = None, err_inv=None,
                       tol=1e-3) -> dict:
    """Markov bound on the per-dither error rate.

    The average error over the dither measure is at most eps by the scale
    normalization, so the fraction of dithers with rate >= gamma*eps must
    stay under 1/gamma plus sampling slack.
    """
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    params = channel_params(1.0, 1.0 / snr)
    if err_inv is None:
        err_inv = inverse_error_function(lat, eps, tol=tol, rng=rng.child(0))
    config = codec_config(lat, err_inv * params.sigma_eff, params, dither="cont")
    t = sample_normal(params.sigma_s, lat.n, rng.child(1), trials=dithers)
    big = np.repeat(t, trials, axis=0)
    res = run_trials(config, big, rng.child(2))
    rates = res["err"].reshape(dithers, trials).mean(axis=1)
    report = {"err_inv": err_inv, "gammas": {}, "pass": True,
              "mean_rate": float(rates.mean())}
    for g in gammas:
        frac = float((rates >= g * eps).mean())
        bound = 1.0 / g
        slack = 3 * math.sqrt(bound * (1 - bound) / dithers)
        ok = frac <= bound + slack
        report["gammas"][g] = {"fraction": frac, "bound": bound,
                               "slack": slack, "pass": ok}
        report["pass"] &= ok
    return report


def sampling_lemma_suite(lat: Lattice, sigma_s, trials, rng: RngStream = None,
                         skip_dither=False, level=0.01) -> dict:
    """Dithered lattice samples must be exactly Gaussian in law.

    Draws T ~ N(0, sigma_s^2 I), then X ~ D_{Lambda+T, sigma_s}, and tests
    X against N(0, sigma_s^2 I): per-coordinate KS, an equiprobable-bin
    chi-square on ||X||^2/sigma_s^2 against chi2(n), and a 3-standard-error
    check on the mean squared norm. KS and chi-square share a Bonferroni
    budget of `level`. skip_dither=True is the broken control: it freezes
    T = 0, which concentrates X on the bare lattice and must fail.
    """
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    if trials < 10_000:
        raise InvalidParams("need at least 10^4 trials")
    n = lat.n
    if skip_dither:
        t = np.zeros((trials, n))
    else:
        t = sample_normal(sigma_s, n, rng.child(0), trials=trials)
    x, _ = batch_coset_sample(lat, t, sigma_s, rng.child(1))

    ks_p = [float(stats.kstest(x[:, i], "norm", args=(0.0, sigma_s)).pvalue)
            for i in range(n)]
    r2 = (x**2).sum(axis=1) / sigma_s**2
    nbins = 64
    edges = stats.chi2.ppf(np.linspace(0.0, 1.0, nbins + 1), df=n)
    edges[0], edges[-1] = -np.inf, np.inf
    counts = np.histogram(r2, bins=edges)[0]
    radial_p = float(stats.chisquare(counts, trials / nbins).pvalue)
    z = (float(r2.mean()) - n) / (float(r2.std(ddof=1)) / math.sqrt(trials))
    per_test = level / (n + 1)
    ok = all(p > per_test for p in ks_p) and radial_p > per_test and abs(z) <= 3
    return {
        "ks_p": ks_p, "radial_p": radial_p, "mean_z": float(z),
        "per_test_level": per_test, "pass": ok,
    }


def discrete_sampling_suite(coarse: Lattice, fine: Lattice, sigma, trials,
                            rng: RngStream = None, p_floor=0.001) -> dict:
    """Discretely dithered samples must reproduce D_{fine,sigma} exactly.

    T' = (D_{fine,sigma} mod coarse) per trial, then X ~ D_{coarse+T',sigma};
    the composition must equal D_{fine,sigma} in law. Chi-square against the
    exact masses, bins pooled from the tail up so every expected count is
    at least 5.
    """
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    tp = sample_dither_discrete(coarse, fine, sigma, rng.child(0), trials=trials)
    x, _ = batch_coset_sample(coarse, tp, sigma, rng.child(1))
    spec = discrete_gaussian(fine, np.zeros(fine.n), sigma)
    cf = np.rint(fine.coords_of(x)).astype(np.int64)
    key_of = {tuple(k): i for i, k in enumerate(map(tuple, spec.coords))}
    counts = np.zeros(len(spec.probs) + 1)
    for row in map(tuple, cf):
        counts[key_of.get(row, len(spec.probs))] += 1
    expected = np.append(spec.probs * trials, 0.0)
    # support is mass-sorted descending: pool the tail until every bin >= 5
    obs = list(counts)
    exp = list(expected)
    while len(exp) > 2 and exp[-1] < 5.0:
        tail_e = exp.pop()
        exp[-1] += tail_e
        tail_o = obs.pop()
        obs[-1] += tail_o
    obs = np.asarray(obs)
    exp = np.asarray(exp)
    pval = float(stats.chisquare(obs, exp * (obs.sum() / exp.sum())).pvalue)
    return {"p_value": pval, "bins": len(exp), "pass": pval > p_floor}


def peak_tail_check(lat: Lattice, sigma_s, trials, rng: RngStream,
                    t_values=(1.0, 2.0, 3.0)) -> dict:
    """Coordinate tail of the shaped signal vs the sub-Gaussian bound.

    X comes from the dithered construction, whose coordinate marginals are
    exactly N(0, sigma_s^2); Pr[|X_i| > t sigma_s] <= 2 exp(-t^2/2) must
    hold within the CI (tested on the first coordinate).
    """
    t = sample_normal(sigma_s, lat.n, rng.child(0), trials=trials)
    x, _ = batch_coset_sample(lat, t, sigma_s, rng.child(1))
    out = {"cases": {}, "pass": True}
    for tv in t_values:
        k = int((np.abs(x[:, 0]) > tv * sigma_s).sum())
        ci = proportion_ci(k, trials, seed=rng.seed)
        bound = 2 * math.exp(-tv**2 / 2)
        ok = ci.lo <= bound
        out["cases"][tv] = {"ci": ci, "bound": bound, "pass": ok}
        out["pass"] &= ok
    return out


def effective_noise_tail_check(lat: Lattice, snr, trials, rng: RngStream,
                               eps_values=(0.3, 0.5)) -> dict:
    """Norm tail of W_eff = (1-alpha) X + alpha W for X ~ D_{Lambda, sigma_s}.

    Checks Pr[||W_eff||^2 > (1+eps) n sigma_eff^2] <= exp(-(n/4)(eps^2-eps^3)).
    """
    params = channel_params(1.0, 1.0 / snr)
    n = lat.n
    x, _ = batch_coset_sample(lat, np.zeros((trials, n)), params.sigma_s,
                              rng.child(0))
    w = sample_normal(params.sigma_w, n, rng.child(1), trials=trials)
    weff2 = (((params.alpha - 1.0) * x + params.alpha * w) ** 2).sum(axis=1)
    out = {"cases": {}, "pass": True}
    for ev in eps_values:
        k = int((weff2 > (1 + ev) * n * params.sigma_eff2).sum())
        ci = proportion_ci(k, trials, seed=rng.seed)
        bound = math.exp(-(n / 4) * (ev**2 - ev**3))
        ok = ci.lo <= bound
        out["cases"][ev] = {"ci": ci, "bound": bound, "pass": ok}
        out["pass"] &= ok
    return out


def tail_bounds_suite(trials=100_000, rng: RngStream = None) -> dict:
    """Both tail families on an n=8 and an n=16 lattice.

    E8 is dilated so the discrete supports stay within the enumeration
    budget; both bounds are dilation-invariant statements.
    """
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    e8 = scale_lattice(standard_lattice("E8"), 4.0)
    z16 = standard_lattice("Z16")
    report = {
        "peak": {
            "E8": peak_tail_check(e8, 1.0, trials, rng.child(0)),
            "Z16": peak_tail_check(z16, 1.0, trials, rng.child(1)),
        },
        "w_eff": {
            "E8": effective_noise_tail_check(e8, 1.0, trials, rng.child(2)),
            "Z16": effective_noise_tail_check(z16, 1.0, trials, rng.child(3)),
        },
    }
    report["pass"] = all(
        case["pass"] for part in (report["peak"], report["w_eff"])
        for case in part.values()
    )
    return report


def converse_experiment(lat: Lattice, sigma_s, sigma_w, trials,
                        rng: RngStream = None) -> ConverseReport:
    """Low-SNR converse: error probability vs the mass at zero.

    The coding distribution is the centered discrete Gaussian (no dither,
    sigma_s fixed a priori); the decoder is the MMSE-scaled closest point.
    Whenever SNR < 1 the error probability must exceed (1 - P_0)/2 up to
    CI slack, and the entropy rate must sit under the closed-form cap.
    """
    if rng is None:
        rng = RngStream(DEFAULT_SEED)
    params = channel_params(sigma_s**2, sigma_w**2)
    config = codec_config(lat, 1.0, params, dither="none")
    n = lat.n
    p0 = mass_zero(lat, sigma_s, rel_tol=1e-9)
    entropy_rate = entropy_exact(lat, np.zeros(n), sigma_s) / n
    upper = (-math.log(p0) / n + math.pi * (1 - p0)
             + 1.8 * math.exp(-1.7 * n) / n)
    res = run_trials(config, np.zeros((trials, n)), rng.child(0))
    half_gap = 0.5 * (1 - p0)
    applies = params.snr < 1
    return ConverseReport(
        p0=p0,
        entropy_rate=entropy_rate,
        entropy_upper=upper,
        p_err=res["p_err"],
        half_gap=half_gap,
        snr=params.snr,
        converse_applies=applies,
        entropy_ok=entropy_rate <= upper + 1e-9,
        error_ok=(not applies) or res["p_err"].hi >= half_gap,
    )
