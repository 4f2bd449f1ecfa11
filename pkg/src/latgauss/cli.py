"""Command-line front end for the shaping library.

Conventions shared by every subcommand:

* Reproducibility. ``--seed`` fixes every random draw. Precedence: the
  flag, then a ``seed=`` line in ``--config``, then the LATGAUSS_SEED
  environment variable, then the documented default 20240901. A re-run
  with the same resolved options and ``--threads 1`` is byte-identical.
* Outputs. JSON documents carry a ``meta`` object and CSV tables a
  leading ``#`` comment line, both embedding the seed, a sha256 hash of
  the resolved options, and the tool version.
* Config files. ``--config FILE`` reads flat ``key=value`` lines (``#``
  comments allowed); keys are long option names of the subcommand being
  run, and explicit flags override file values.
* Units. Rates and entropies are nats per channel use; snr is a power
  ratio; sigma values are amplitudes in channel units; power is per
  dimension in channel units squared; error quantities are probabilities.
* Exit codes: 0 success, 1 a suite or sandwich check failed, 2 usage or
  parameter errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import fields, is_dataclass

import numpy as np

from . import __version__
from .analysis import cdlp_sandwich, finite_blocklength
from .codec import channel_params, codec_config, normalize_scale
from .errors import LatgaussError, UsageError
from .lattices import from_json, nld, scale_lattice, standard_lattice, to_json
from .measures import (
    entropy_exact,
    flatness_factor,
    gaussian_mass,
    mass_zero,
    smoothing_parameter,
)
from .montecarlo import (
    chernoff_power_check,
    converse_experiment,
    discrete_sampling_suite,
    inverse_error_function,
    markov_error_suite,
    negative_moment_check,
    sampling_lemma_suite,
    tail_bounds_suite,
    theorem1_suite,
    transmission_experiment,
)
from .rng import DEFAULT_SEED, RngStream
from .sampling import discrete_gaussian, sample_discrete_gaussian

SEED_ENV = "LATGAUSS_SEED"


# ---------------------------------------------------------------------------
# shared plumbing


def parse_lattice(spec):
    """Lattice from a name (Z4, D3, E8, A2), SCALE*NAME, or a JSON file."""
    spec = spec.strip()
    if os.path.sep in spec or spec.endswith(".json"):
        try:
            with open(spec, encoding="utf-8") as fh:
                return from_json(json.load(fh))
        except OSError as exc:
            raise UsageError(f"cannot read lattice file {spec!r}: {exc}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"lattice file {spec!r} is not valid JSON: {exc}")
    if "*" in spec:
        stxt, _, name = spec.partition("*")
        try:
            c = float(stxt)
        except ValueError:
            raise UsageError(f"bad lattice scale prefix in {spec!r}")
        return scale_lattice(standard_lattice(name), c)
    return standard_lattice(spec)


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _config_hash(ns):
    # Paths and the handler are presentation, not experiment identity.
    skip = {"func", "config", "csv"}
    d = {k: v for k, v in vars(ns).items() if k not in skip and not callable(v)}
    blob = json.dumps(_jsonable(d), sort_keys=True, separators=(",", ":"),
                      default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _meta(ns):
    return {"seed": ns.seed, "config_hash": _config_hash(ns),
            "version": __version__}


def _print_json(doc, ns):
    doc = dict(doc)
    doc["meta"] = _meta(ns)
    sys.stdout.write(json.dumps(_jsonable(doc), sort_keys=True, indent=2))
    sys.stdout.write("\n")


def _csv_meta_line(ns):
    m = _meta(ns)
    return f"# latgauss {m['version']} seed={m['seed']} config={m['config_hash']}"


def _emit_csv(lines, path, ns):
    text = "\n".join([_csv_meta_line(ns)] + lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _pick(value, default):
    return default if value is None else value


def resolve_channel(ns):
    """Exactly one of --snr or the --sigma-s2/--sigma-w2 pair."""
    has_snr = ns.snr is not None
    has_pair = ns.sigma_s2 is not None or ns.sigma_w2 is not None
    if has_snr and has_pair:
        raise UsageError("give either --snr or the --sigma-s2/--sigma-w2 "
                         "pair, not both")
    if has_snr:
        if not ns.snr > 0:
            raise UsageError("--snr must be positive")
        return channel_params(1.0, 1.0 / ns.snr)
    if ns.sigma_s2 is None or ns.sigma_w2 is None:
        raise UsageError("need --snr or both --sigma-s2 and --sigma-w2")
    return channel_params(ns.sigma_s2, ns.sigma_w2)


def parse_dither(spec):
    if spec == "none" or spec == "cont":
        return spec, None
    if spec.startswith("discrete:"):
        return "discrete", parse_lattice(spec.split(":", 1)[1])
    raise UsageError("dither must be none, cont, or discrete:<lattice>")


def parse_peak(spec, params):
    if spec == "off":
        return "off", {}
    if spec == "zeroize" or spec.startswith("zeroize:"):
        if ":" in spec:
            budget = float(spec.split(":", 1)[1])
        else:
            budget = 4.0 * params.sigma_s2  # cap rarely hit by a Gaussian
        return "zeroize", {"peak_budget": budget}
    if spec.startswith("modb:"):
        return "modb", {"mod_b": float(spec.split(":", 1)[1])}
    raise UsageError("peak must be off, zeroize[:P], or modb:<B>")


# ---------------------------------------------------------------------------
# subcommands


def cmd_lattice(ns):
    lat = parse_lattice(ns.lattice)
    doc = {
        "lattice": to_json(lat),
        "volume": lat.volume,
        "covering_bound": lat.covering_bound,
    }
    if ns.sigma is not None:
        doc["nld"] = nld(lat, ns.sigma)
    _print_json(doc, ns)
    return 0


def cmd_measure(ns):
    lat = parse_lattice(ns.lattice)
    shift = np.zeros(lat.n) if ns.shift is None else np.asarray(ns.shift)
    if shift.shape != (lat.n,):
        raise UsageError(f"--shift needs {lat.n} comma-separated values")
    theta = gaussian_mass(lat, shift, ns.sigma)
    fb = flatness_factor(lat, ns.sigma, samples=ns.flatness_samples,
                         seed=ns.seed)
    sm = smoothing_parameter(lat, ns.eps)
    doc = {
        "lattice": ns.lattice,
        "sigma": ns.sigma,
        "shift": shift,
        "f_mass": theta.value,
        "tail_bound": theta.tail_bound,
        "P0": mass_zero(lat, ns.sigma),
        "entropy": entropy_exact(lat, shift, ns.sigma),
        "flatness_lower": fb.lower,
        "flatness_upper": fb.upper,
        "eta": sm.s,
        "eta_eps": ns.eps,
    }
    _print_json(doc, ns)
    return 0


def cmd_sample(ns):
    lat = parse_lattice(ns.lattice)
    shift = np.zeros(lat.n) if ns.shift is None else np.asarray(ns.shift)
    if shift.shape != (lat.n,):
        raise UsageError(f"--shift needs {lat.n} comma-separated values")
    spec = discrete_gaussian(lat, shift, ns.sigma)
    pts = sample_discrete_gaussian(spec, RngStream(ns.seed),
                                   trials=ns.n_samples)
    lines = [",".join(_fmt(float(v)) for v in row) for row in pts]
    _emit_csv(lines, ns.csv, ns)
    return 0


def _build_codec(ns, lat, params, root):
    """Resolve the scale (flag, or Monte Carlo inversion) and the modes."""
    dither, fine = parse_dither(ns.dither)
    peak, peak_kw = parse_peak(ns.peak, params)
    if ns.scale is not None:
        scale, err_inv = ns.scale, None
    else:
        err_inv = inverse_error_function(lat, ns.eps, trials=ns.inv_trials,
                                         rng=root.child(1))
        scale = normalize_scale(lat, params, ns.eps, err_inv)
    config = codec_config(lat, scale, params, dither=dither,
                          dither_fine=fine, peak=peak, **peak_kw)
    return config, err_inv


def cmd_simulate(ns):
    lat = parse_lattice(ns.lattice)
    params = resolve_channel(ns)
    root = RngStream(ns.seed)
    config, err_inv = _build_codec(ns, lat, params, root)
    res = transmission_experiment(config, ns.trials, root.child(2),
                                  keep_err=bool(ns.csv))
    err = res.pop("err", None)
    if ns.csv:
        rows = ["trial,error"]
        rows += [f"{i},{int(e)}" for i, e in enumerate(err)]
        _emit_csv(rows, ns.csv, ns)
    ci = res["p_err"]
    doc = {
        "p_err": ci.p_hat,
        "ci": [ci.lo, ci.hi],
        "avg_power": res["avg_power"],
        "rate_proxy": res["rate_proxy"],
        "errors": res["errors"],
        "failures": res["failures"],
        "trials": ns.trials,
        "snr": params.snr,
        "scale": config.scale,
        "err_inv": err_inv,
    }
    _print_json(doc, ns)
    return 0


def cmd_sweep(ns):
    lat = parse_lattice(ns.lattice)
    root = RngStream(ns.seed)
    err_inv = inverse_error_function(lat, ns.eps, trials=ns.inv_trials,
                                     rng=root.child(1))
    lines = ["snr,scale,p_err,ci_lo,ci_hi,avg_power,rate_proxy"]
    for i, snr in enumerate(ns.snr_grid):
        if not snr > 0:
            raise UsageError("--snr-grid entries must be positive")
        params = channel_params(1.0, 1.0 / snr)
        dither, fine = parse_dither(ns.dither)
        peak, peak_kw = parse_peak(ns.peak, params)
        config = codec_config(lat, err_inv * params.sigma_eff, params,
                              dither=dither, dither_fine=fine, peak=peak,
                              **peak_kw)
        r = transmission_experiment(config, ns.trials, root.child(10 + i))
        ci = r["p_err"]
        lines.append(",".join(_fmt(v) for v in (
            snr, config.scale, ci.p_hat, ci.lo, ci.hi,
            r["avg_power"], r["rate_proxy"],
        )))
    _emit_csv(lines, ns.csv, ns)
    return 0


# suite name -> (runner, one-line summary of defaults)


def _suite_sampling_lemma(ns, root):
    lattice = _pick(ns.lattice, "Z4")
    sigma_s = _pick(ns.sigma_s, 1.0)
    trials = _pick(ns.trials, 100_000)
    res = sampling_lemma_suite(parse_lattice(lattice), sigma_s, trials,
                               rng=root)
    params = {"lattice": lattice, "sigma_s": sigma_s, "trials": trials}
    return params, res, res["pass"]


def _suite_discrete_sampling(ns, root):
    lattice = _pick(ns.lattice, "2*Z")
    fine = _pick(ns.fine, "Z")
    sigma = _pick(ns.sigma, 2.0)
    trials = _pick(ns.trials, 100_000)
    res = discrete_sampling_suite(parse_lattice(lattice), parse_lattice(fine),
                                  sigma, trials, rng=root)
    params = {"lattice": lattice, "fine": fine, "sigma": sigma,
              "trials": trials}
    return params, res, res["pass"]


def _suite_negative_moment(ns, root):
    lattice = _pick(ns.lattice, "Z")
    sigma = _pick(ns.sigma, 1.0)
    dithers = _pick(ns.dithers, 10_000)
    lat = parse_lattice(lattice)
    ci = negative_moment_check(lat, sigma, dithers, root)
    ok = ci.lo <= lat.volume <= ci.hi
    params = {"lattice": lattice, "sigma": sigma, "dithers": dithers}
    return params, {"ci": ci, "volume": lat.volume, "pass": ok}, ok


def _suite_chernoff(ns, root):
    lattice = _pick(ns.lattice, "Z4")
    sigma_s = _pick(ns.sigma_s, 1.0)
    eps = _pick(ns.eps, 0.9)
    dithers = _pick(ns.dithers, 2000)
    res = chernoff_power_check(parse_lattice(lattice), sigma_s, eps, dithers,
                               root)
    params = {"lattice": lattice, "sigma_s": sigma_s, "eps": eps,
              "dithers": dithers}
    return params, res, res["pass"]


def _suite_tail_bounds(ns, root):
    trials = _pick(ns.trials, 100_000)
    res = tail_bounds_suite(trials=trials, rng=root)
    return {"trials": trials}, res, res["pass"]


def _suite_markov(ns, root):
    lattice = _pick(ns.lattice, "Z4")
    eps = _pick(ns.eps, 0.05)
    snr = _pick(ns.snr, 1.0)
    dithers = _pick(ns.dithers, 500)
    trials = _pick(ns.trials, 2000)
    gammas = tuple(_pick(ns.gammas, [2.0, 6.0]))
    res = markov_error_suite(parse_lattice(lattice), eps, snr, gammas=gammas,
                             dithers=dithers, trials=trials, rng=root)
    params = {"lattice": lattice, "eps": eps, "snr": snr, "dithers": dithers,
              "trials": trials, "gammas": list(gammas)}
    return params, res, res["pass"]


def _suite_converse(ns, root):
    lattice = _pick(ns.lattice, "Z")
    sigma_s = _pick(ns.sigma_s, 1.0)
    sigma_w = _pick(ns.sigma_w, 2.0)
    trials = _pick(ns.trials, 100_000)
    rep = converse_experiment(parse_lattice(lattice), sigma_s, sigma_w,
                              trials, root)
    ok = rep.entropy_ok and rep.error_ok
    params = {"lattice": lattice, "sigma_s": sigma_s, "sigma_w": sigma_w,
              "trials": trials}
    return params, rep, ok


def _suite_theorem1(ns, root):
    lattice = _pick(ns.lattice, "E8")
    eps = _pick(ns.eps, 0.05)
    snr = _pick(ns.snr, 1.0)
    dithers = _pick(ns.dithers, 100)
    trials = _pick(ns.trials, 2000)
    res = theorem1_suite(parse_lattice(lattice), eps, snr, dithers=dithers,
                         trials=trials, rng=root)
    res = {k: v for k, v in res.items() if k != "audits"}
    params = {"lattice": lattice, "eps": eps, "snr": snr, "dithers": dithers,
              "trials": trials}
    return params, res, res["pass"]


_SUITES = {
    "sampling-lemma": _suite_sampling_lemma,
    "discrete-sampling-lemma": _suite_discrete_sampling,
    "negative-moment": _suite_negative_moment,
    "chernoff": _suite_chernoff,
    "tail-bounds": _suite_tail_bounds,
    "markov": _suite_markov,
    "converse": _suite_converse,
    "theorem1": _suite_theorem1,
}

_SUITE_DEFAULTS = """\
suite defaults (any flag overrides):
  sampling-lemma           lattice Z4, sigma-s 1, trials 100000
  discrete-sampling-lemma  lattice 2*Z, fine Z, sigma 2, trials 100000
  negative-moment          lattice Z, sigma 1, dithers 10000
  chernoff                 lattice Z4, sigma-s 1, eps 0.9, dithers 2000
  tail-bounds              trials 100000 (lattices fixed: 4*E8 and Z16)
  markov                   lattice Z4, eps 0.05, snr 1, dithers 500,
                           trials 2000, gammas 2,6
  converse                 lattice Z, sigma-s 1, sigma-w 2, trials 100000
  theorem1                 lattice E8, eps 0.05, snr 1, dithers 100,
                           trials 2000
"""


def cmd_verify(ns):
    runner = _SUITES.get(ns.suite)
    if runner is None:
        raise UsageError(f"unknown suite {ns.suite!r}; choose from "
                         f"{', '.join(sorted(_SUITES))}")
    params, details, ok = runner(ns, RngStream(ns.seed))
    doc = {"suite": ns.suite, "params": params, "details": details,
           "pass": ok}
    _print_json(doc, ns)
    return 0 if ok else 1


def cmd_analyze(ns):
    root = RngStream(ns.seed)
    cols = ["snr", "n", "eps", "capacity", "dispersion",
            "normal_approx_rate", "delta_eps_n", "intro_gap"]
    if ns.gamma is not None:
        cols.append("theorem1_gap")
    lines = [",".join(cols)]
    for snr in ns.snr_grid:
        for n in ns.n_grid:
            rep = finite_blocklength(snr, n, ns.eps, gamma=ns.gamma)
            row = [snr, n, ns.eps, rep.capacity, rep.dispersion,
                   rep.normal_approx_rate, rep.delta_eps_n, rep.intro_gap]
            if ns.gamma is not None:
                row.append(rep.theorem1_gap)
            lines.append(",".join(_fmt(v) for v in row))
    _emit_csv(lines, ns.csv, ns)
    sandwich = {}
    for i, spec in enumerate(ns.lattices or []):
        lat = parse_lattice(spec)
        sandwich[spec] = cdlp_sandwich(lat, ns.eps, trials=ns.inv_trials,
                                       rng=root.child(50 + i))
    if ns.csv or sandwich:
        _print_json({"eps": ns.eps, "sandwich": sandwich}, ns)
    return 1 if any(not v["ok"] for v in sandwich.values()) else 0


def cmd_converse(ns):
    rep = converse_experiment(parse_lattice(ns.lattice), ns.sigma_s,
                              ns.sigma_w, ns.trials, RngStream(ns.seed))
    ok = rep.entropy_ok and rep.error_ok
    doc = _jsonable(rep)
    doc["pass"] = ok
    _print_json(doc, ns)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, "
                                         f"got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, "
                                         f"got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _str_list(text):
    vals = [t.strip() for t in text.split(",") if t.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=None,
        help=f"RNG seed; default {DEFAULT_SEED}, overridable by the "
             f"{SEED_ENV} environment variable (flag wins over config file "
             f"wins over environment)")
    common.add_argument(
        "--threads", type=int, default=1,
        help="worker cap; 1 (default) is bit-exact across re-runs. The "
             "computations are vectorized in-process, so higher values run "
             "the same path and keep all integer counters identical")
    common.add_argument(
        "--config", metavar="FILE",
        help="flat key=value file of long option names; explicit flags "
             "override file values")

    parser = argparse.ArgumentParser(
        prog="latgauss",
        description="Discrete Gaussian shaping over lattices: exact "
                    "measures, seeded experiments, and verification suites.",
    )
    parser.add_argument("--version", action="version",
                        version=f"latgauss {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True,
                                metavar="subcommand")

    p = sub.add_parser(
        "lattice", parents=[common],
        help="describe a lattice as JSON",
        description="JSON description: basis (row-major), n, volume, and a "
                    "covering-radius upper bound (channel units). With "
                    "--sigma also the normalized log density report (nats "
                    "per dimension).")
    p.add_argument("--lattice", required=True,
                   help="name (Z, Z4, D3, E8, A2), SCALE*NAME, or JSON file")
    p.add_argument("--sigma", type=float,
                   help="noise deviation for the density report (amplitude)")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser(
        "measure", parents=[common],
        help="exact Gaussian measures of a lattice",
        description="JSON record: f_mass = sum of the sigma-Gaussian "
                    "density over lattice+shift with its certified relative "
                    "tail_bound; P0 = probability of the zero point "
                    "(probability); entropy of the coset distribution "
                    "(nats); flatness bracket (dimensionless); eta = "
                    "smoothing parameter at eta-eps (amplitude scaling).")
    p.add_argument("--lattice", required=True,
                   help="name, SCALE*NAME, or JSON file")
    p.add_argument("--sigma", type=float, required=True,
                   help="Gaussian deviation (amplitude)")
    p.add_argument("--shift", type=_float_list,
                   help="coset shift, comma-separated; default zeros")
    p.add_argument("--eps", type=float, default=0.01,
                   help="smoothing-parameter target (default 0.01)")
    p.add_argument("--flatness-samples", type=int, default=512,
                   help="cell points for the flatness lower bound "
                        "(default 512)")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser(
        "sample", parents=[common],
        help="draw discrete Gaussian samples",
        description="CSV, one sample per line: the coordinates of a point "
                    "of lattice+shift drawn from the sigma-discrete "
                    "Gaussian (channel units).")
    p.add_argument("--lattice", required=True,
                   help="name, SCALE*NAME, or JSON file")
    p.add_argument("--shift", type=_float_list,
                   help="coset shift, comma-separated; default zeros")
    p.add_argument("--sigma", type=float, required=True,
                   help="Gaussian deviation (amplitude)")
    p.add_argument("--n-samples", type=int, default=1,
                   help="number of rows to emit (default 1)")
    p.add_argument("--csv", metavar="FILE",
                   help="write the table here instead of stdout")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser(
        "simulate", parents=[common],
        help="end-to-end shaping + AWGN + decoding experiment",
        description="JSON summary: p_err with its 99%% Clopper-Pearson ci "
                    "(probability), avg_power per dimension (channel units "
                    "squared), rate_proxy = exact dither-averaged entropy "
                    "rate (nats per channel use). The code lattice is "
                    "scaled so the effective noise escapes with "
                    "probability about --eps, unless --scale overrides.")
    p.add_argument("--lattice", required=True,
                   help="name, SCALE*NAME, or JSON file")
    p.add_argument("--snr", type=float,
                   help="signal-to-noise power ratio (sets sigma_s2=1)")
    p.add_argument("--sigma-s2", type=float,
                   help="signal power per dimension (channel units squared)")
    p.add_argument("--sigma-w2", type=float,
                   help="noise power per dimension (channel units squared)")
    p.add_argument("--eps", type=float, default=0.05,
                   help="target error probability (default 0.05)")
    p.add_argument("--dither", default="cont",
                   help="none | cont | discrete:<lattice> (default cont)")
    p.add_argument("--peak", default="off",
                   help="off | zeroize[:P] | modb:<B>; P is the per-"
                        "dimension power cap (default 4*sigma_s2), B the "
                        "folding modulus (default off)")
    p.add_argument("--trials", type=int, default=100_000,
                   help="transmissions to simulate (default 100000)")
    p.add_argument("--scale", type=float,
                   help="fix the lattice scale directly, skipping the "
                        "Monte Carlo inversion of the error curve")
    p.add_argument("--inv-trials", type=int, default=200_000,
                   help="samples per rung for the error-curve inversion "
                        "(default 200000)")
    p.add_argument("--csv", metavar="FILE",
                   help="also write a per-trial CSV (columns: trial index, "
                        "error indicator)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "sweep", parents=[common],
        help="simulate across an SNR grid",
        description="CSV columns: snr (power ratio), scale (amplitude), "
                    "p_err/ci_lo/ci_hi (probability, 99%% Clopper-Pearson), "
                    "avg_power (channel units squared per dimension), "
                    "rate_proxy (nats per channel use).")
    p.add_argument("--lattice", required=True,
                   help="name, SCALE*NAME, or JSON file")
    p.add_argument("--snr-grid", type=_float_list, required=True,
                   help="comma-separated SNR values (power ratios)")
    p.add_argument("--eps", type=float, default=0.05,
                   help="target error probability (default 0.05)")
    p.add_argument("--dither", default="cont",
                   help="none | cont | discrete:<lattice> (default cont)")
    p.add_argument("--peak", default="off",
                   help="off | zeroize[:P] | modb:<B> (default off)")
    p.add_argument("--trials", type=int, default=20_000,
                   help="transmissions per grid point (default 20000)")
    p.add_argument("--inv-trials", type=int, default=200_000,
                   help="samples per rung for the error-curve inversion "
                        "(default 200000)")
    p.add_argument("--csv", metavar="FILE",
                   help="write the table here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "verify", parents=[common],
        help="run a named verification suite",
        description="JSON verdict for one suite; exit 1 if it fails. "
                    "Probabilities are compared through 99%% confidence "
                    "intervals, rates and entropies are nats per channel "
                    "use, power is per dimension in sigma_s^2 units.",
        epilog=_SUITE_DEFAULTS,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--suite", required=True, choices=sorted(_SUITES),
                   help="suite name")
    p.add_argument("--lattice", help="name, SCALE*NAME, or JSON file")
    p.add_argument("--fine", help="fine lattice for the discrete dither "
                                  "suite")
    p.add_argument("--sigma", type=float,
                   help="Gaussian deviation (amplitude)")
    p.add_argument("--sigma-s", type=float,
                   help="signal deviation (amplitude)")
    p.add_argument("--sigma-w", type=float,
                   help="noise deviation (amplitude)")
    p.add_argument("--eps", type=float, help="error or deviation target "
                                             "(probability)")
    p.add_argument("--snr", type=float, help="power ratio")
    p.add_argument("--trials", type=int, help="per-dither or total trials")
    p.add_argument("--dithers", type=int, help="dither population size")
    p.add_argument("--gammas", type=_float_list,
                   help="Markov thresholds, comma-separated")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "analyze", parents=[common],
        help="finite-blocklength table and sandwich reports",
        description="CSV columns: snr (power ratio), n (dimension), eps "
                    "(probability), capacity and normal_approx_rate (nats "
                    "per channel use), dispersion (nats^2), delta_eps_n and "
                    "intro_gap and theorem1_gap (nats per channel use or "
                    "per dimension). With --lattices also a JSON report "
                    "bracketing each lattice's inverse error function "
                    "between smoothing parameters of the dual (amplitude "
                    "scalings).")
    p.add_argument("--snr-grid", type=_float_list, required=True,
                   help="comma-separated SNR values (power ratios)")
    p.add_argument("--n-grid", type=_int_list, required=True,
                   help="comma-separated dimensions")
    p.add_argument("--eps", type=float, default=0.05,
                   help="target error probability (default 0.05)")
    p.add_argument("--gamma", type=float,
                   help="modulation loss; adds the theorem1_gap column")
    p.add_argument("--lattices", type=_str_list,
                   help="comma-separated lattice specs for sandwich reports")
    p.add_argument("--inv-trials", type=int, default=400_000,
                   help="samples per rung for the error-curve inversion "
                        "(default 400000)")
    p.add_argument("--csv", metavar="FILE",
                   help="write the table here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser(
        "converse", parents=[common],
        help="low-SNR converse experiment",
        description="JSON report: p0 (probability of the zero point), "
                    "entropy_rate vs entropy_upper (nats per channel use), "
                    "p_err with 99%% Clopper-Pearson ci vs half_gap = "
                    "(1-p0)/2 (probability). Exit 1 if a check fails.")
    p.add_argument("--lattice", default="Z",
                   help="name, SCALE*NAME, or JSON file (default Z)")
    p.add_argument("--sigma-s", type=float, default=1.0,
                   help="signal deviation (amplitude, default 1)")
    p.add_argument("--sigma-w", type=float, default=2.0,
                   help="noise deviation (amplitude, default 2)")
    p.add_argument("--trials", type=int, default=100_000,
                   help="transmissions (default 100000)")
    p.set_defaults(func=cmd_converse)

    return parser


# ---------------------------------------------------------------------------
# config file and entry point


def _config_flags(path):
    """Translate key=value lines into long flags (inserted before the
    user's own flags, so the command line wins)."""
    flags = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, val = line.partition("=")
                key = key.strip().lower().replace("_", "-")
                if not sep or not key:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                flags += [f"--{key}", val.strip()]
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}")
    return flags


def _inject_config(argv):
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return argv
    idx = next((i for i, t in enumerate(argv) if not t.startswith("-")), None)
    if idx is None:
        return argv
    return argv[:idx + 1] + _config_flags(path) + argv[idx + 1:]


def _finish_namespace(ns):
    if getattr(ns, "seed", None) is None:
        env = os.environ.get(SEED_ENV)
        if env is None:
            ns.seed = DEFAULT_SEED
        else:
            try:
                ns.seed = int(env)
            except ValueError:
                raise UsageError(f"{SEED_ENV} must be an integer, "
                                 f"got {env!r}")
    if getattr(ns, "threads", 1) < 1:
        raise UsageError("--threads must be at least 1")


def run(argv=None) -> int:
    """Parse and execute one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _inject_config(argv)
        ns = parser.parse_args(argv)
        _finish_namespace(ns)
        return ns.func(ns)
    except SystemExit as exc:  # argparse usage errors, --help, --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LatgaussError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
