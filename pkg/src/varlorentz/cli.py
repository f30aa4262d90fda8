"""Command-line experiment runner.

Each subcommand reads an optional JSON config, lets command-line flags
override it, validates everything, runs, and writes JSON/CSV files into the
output directory.  Exit codes: 0 success, 1 bound or property violation,
2 configuration error, 3 numerical failure.
"""

import argparse
import copy
import json
import math
import os
import sys
import tempfile

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "rearrange": {
        "profile": {"dim": 2, "radius": 1.0, "kind": "tent"},
        "t_points": 101,
        "r_points": 101,
        "lambda_points": 101,
        "tol": 1e-7,
    },
    "norm": {
        "profile": {"dim": 2, "radius": 1.0, "kind": "plateau_tent"},
        "exponent": {"kind": "log_singular", "p": 1.0, "d": 2, "C": 1.0, "ell": 1.0, "eta": 0.1},
        "second_index": 1.0,
        "tol": 1e-11,
    },
    "classify": {
        "family": {"p": 1.0, "d": 2, "C": 1.0, "ell": 0.5, "eta": 0.1},
        "alphas": [2.0, 10.0, 100.0, 1e4, 1e8],
        "bump_scales": [2 ** k for k in range(1, 11)],
        "decay_exponents": list(range(1, 21)),
        "safety": 0.5,
        "tol": 1e-4,
    },
    "gamma": {
        "family": {"p": 1.0, "d": 2, "C": 1.0, "ell": 1.0, "eta": 0.1},
        "radii": [0.1, 0.01, 0.001],
        "budget": 5000,
        "seed": 0,
    },
    "bernstein": {
        "family": {"p": 1.0, "d": 2, "C": 1.0, "ell": 1.0, "eta": 0.1},
        "eps": 0.01,
        "N": 6,
        "samples": 500,
        "seed": 42,
        "budget": 5000,
        "tol": 1e-6,
    },
}


# ---------------------------------------------------------------------------
# config handling


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        # a new kind brings its own keys, so it replaces the default block
        if (isinstance(v, dict) and isinstance(out.get(k), dict)
                and v.get("kind", out[k].get("kind")) == out[k].get("kind")):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _number(cfg, key, lo=None, hi=None, integer=False, strict_lo=False):
    v = cfg.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key!r} must be a number")
    if integer and int(v) != v:
        raise ConfigError(f"{key!r} must be an integer")
    if not math.isfinite(v):
        raise ConfigError(f"{key!r} must be finite")
    if lo is not None and (v < lo or (strict_lo and v == lo)):
        raise ConfigError(f"{key!r} must be {'>' if strict_lo else '>='} {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{key!r} must be <= {hi}")
    return int(v) if integer else float(v)


def _check_keys(cfg, allowed, where):
    extra = set(cfg) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def _build_profile(spec):
    from .domain import BallDomain, RadialProfile
    _check_keys(spec, {"dim", "radius", "kind", "knots", "values", "radii", "levels", "height",
                       "support"}, "profile")
    dim = _number(spec, "dim", 2, integer=True)
    radius = _number(spec, "radius", 0, strict_lo=True)
    dom = BallDomain(dim, radius)
    kind = spec.get("kind", "knots")
    try:
        if kind == "tent":
            return RadialProfile.tent(dom, spec.get("height", 1.0))
        if kind == "plateau_tent":
            return RadialProfile.plateau_tent(dom, spec.get("support"), spec.get("height", 1.0))
        if kind == "steps":
            return RadialProfile.steps(dom, spec["radii"], spec["levels"])
        if kind == "knots":
            return RadialProfile(dom, spec["knots"], spec["values"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad profile: {exc}") from exc
    raise ConfigError(f"unknown profile kind {kind!r}")


def _build_exponent(spec):
    from .domain import ConstantExponent, LogSingularExponent
    kind = spec.get("kind")
    try:
        if kind == "constant":
            _check_keys(spec, {"kind", "q0"}, "exponent")
            return ConstantExponent(_number(spec, "q0", 1))
        if kind == "log_singular":
            _check_keys(spec, {"kind", "p", "d", "C", "ell", "eta"}, "exponent")
            return LogSingularExponent(_number(spec, "p", 1), _number(spec, "d", 2, integer=True),
                                       _number(spec, "C"), _number(spec, "ell"),
                                       _number(spec, "eta"))
    except ValueError as exc:
        raise ConfigError(f"bad exponent: {exc}") from exc
    raise ConfigError(f"unknown exponent kind {kind!r}")


def _build_family(spec):
    from .compactness import FamilyParams
    _check_keys(spec, {"p", "d", "C", "ell", "eta", "radius"}, "family")
    try:
        return FamilyParams(_number(spec, "p", 1), _number(spec, "d", 2, integer=True),
                            _number(spec, "C"), _number(spec, "ell"), _number(spec, "eta"),
                            float(spec.get("radius", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"bad family: {exc}") from exc


def _validate(command, cfg):
    """Check a resolved config and build the objects the command needs."""
    _check_keys(cfg, set(DEFAULTS[command]) | {"threads"}, "config")
    built = {}
    if "threads" in cfg and cfg["threads"] is not None:
        _number(cfg, "threads", 1, integer=True)
    if command == "rearrange":
        built["profile"] = _build_profile(cfg["profile"])
        for key in ("t_points", "r_points", "lambda_points"):
            _number(cfg, key, 2, integer=True)
        _number(cfg, "tol", 0, strict_lo=True)
    elif command == "norm":
        built["profile"] = _build_profile(cfg["profile"])
        built["exponent"] = _build_exponent(cfg["exponent"])
        _number(cfg, "second_index", 1)
        _number(cfg, "tol", 0, strict_lo=True)
        if built["profile"].domain.dim != getattr(built["exponent"], "d", built["profile"].domain.dim):
            raise ConfigError("profile and exponent dimensions differ")
    elif command == "classify":
        built["family"] = _build_family(cfg["family"])
        for key in ("alphas", "bump_scales", "decay_exponents"):
            if not isinstance(cfg[key], list) or not cfg[key]:
                raise ConfigError(f"{key!r} must be a nonempty list")
        if any(not (isinstance(a, (int, float)) and a > 1) for a in cfg["alphas"]):
            raise ConfigError("alphas must exceed 1")
        if any(not (isinstance(n, int) and n >= 1) for n in cfg["bump_scales"]):
            raise ConfigError("bump_scales must be positive integers")
        ks = cfg["decay_exponents"]
        if any(not isinstance(k, int) for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ConfigError("decay_exponents must be increasing integers")
        _number(cfg, "safety", 0, strict_lo=True)
        _number(cfg, "tol", 0, strict_lo=True)
    elif command == "gamma":
        fam = _build_family(cfg["family"])
        built["family"] = fam
        radii = cfg["radii"]
        if (not isinstance(radii, list) or not radii
                or any(not isinstance(r, (int, float)) or not 0 < r <= fam.eta for r in radii)
                or any(b >= a for a, b in zip(radii, radii[1:]))):
            raise ConfigError("radii must be a decreasing list inside (0, eta]")
        _number(cfg, "budget", 0, integer=True)
        _number(cfg, "seed", 0, integer=True)
    elif command == "bernstein":
        fam = _build_family(cfg["family"])
        if fam.ell != 1:
            raise ConfigError("bernstein needs the critical family (ell = 1)")
        built["family"] = fam
        _number(cfg, "eps", 0, 1, strict_lo=True)
        _number(cfg, "N", 1, integer=True)
        _number(cfg, "samples", 1, integer=True)
        _number(cfg, "seed", 0, integer=True)
        _number(cfg, "budget", 0, integer=True)
        _number(cfg, "tol", 0, strict_lo=True)
    return built


# ---------------------------------------------------------------------------
# output


def _plain(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to strings."""
    import numpy as np
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    _atomic_write(path, json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n")


def write_csv(path, header, columns):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join("%.17g" % float(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _envelope(command, cfg, result):
    from . import __version__
    return {"command": command, "version": __version__, "config": cfg, "result": result}


# ---------------------------------------------------------------------------
# commands


def cmd_rearrange(cfg, built, out):
    import numpy as np
    from .rearrangement import (decreasing_rearrangement, distribution_function,
                                symmetric_decreasing_rearrangement)
    f = built["profile"]
    dom = f.domain
    fstar = decreasing_rearrangement(f)
    df = distribution_function(f)
    fsharp = symmetric_decreasing_rearrangement(f, measure_tol=cfg["tol"], value_tol=cfg["tol"])
    total = dom.measure()
    t = np.unique(np.concatenate([np.linspace(0.0, total, cfg["t_points"]), fstar.breakpoints]))
    lam = np.unique(np.concatenate([np.linspace(0.0, f.sup, cfg["lambda_points"]), df.breakpoints]))
    r = np.linspace(0.0, dom.radius, cfg["r_points"])
    write_csv(os.path.join(out, "f_star.csv"), ["t", "f_star"], [t, fstar(t)])
    write_csv(os.path.join(out, "distribution.csv"), ["lambda", "d_f"], [lam, df(lam)])
    write_csv(os.path.join(out, "f_sharp.csv"), ["r", "f_sharp"], [r, fsharp(r)])
    result = {"breakpoints": fstar.breakpoints.tolist(), "measure": total,
              "sup": f.sup, "files": ["f_star.csv", "distribution.csv", "f_sharp.csv"]}
    write_json(os.path.join(out, "rearrange.json"), _envelope("rearrange", cfg, result))
    return EXIT_OK


def cmd_norm(cfg, built, out):
    from .norms import NormSpec, lorentz_norm, luxemburg_norm, modular
    from .rearrangement import symmetric_decreasing_rearrangement
    f, q = built["profile"], built["exponent"]
    spec = NormSpec(q, cfg["second_index"])
    fs = symmetric_decreasing_rearrangement(f)
    result = {
        "modular": modular(f, q),
        "luxemburg": luxemburg_norm(f, q),
        "lorentz": lorentz_norm(f, spec, rtol=cfg["tol"]),
        "lorentz_of_rearrangement": lorentz_norm(fs, spec, rtol=cfg["tol"]),
    }
    write_json(os.path.join(out, "norm.json"), _envelope("norm", cfg, result))
    return EXIT_OK


def cmd_classify(cfg, built, out):
    from . import compactness
    fam = built["family"]
    radii = [2.0 ** -k for k in cfg["decay_exponents"]]
    verdict = compactness.classify(fam, alphas=cfg["alphas"], n_list=cfg["bump_scales"],
                                   decay_radii=radii, safety=cfg["safety"], agree_tol=cfg["tol"])
    write_json(os.path.join(out, "verdict.json"), _envelope("classify", cfg, verdict.as_dict()))
    return EXIT_OK


def cmd_gamma(cfg, built, out):
    from .extremal import gamma_limit
    from .norms import NormSpec
    fam = built["family"]
    spec = NormSpec(fam.exponent(), fam.p)
    est = gamma_limit(cfg["radii"], spec, fam.p, budget=cfg["budget"], seed=cfg["seed"])
    result = est.as_dict()
    result["per_radius"] = [t.as_dict() for t in est.trace]
    for t in result["per_radius"]:
        t.pop("trace", None)
    write_json(os.path.join(out, "gamma.json"), _envelope("gamma", cfg, result))
    write_csv(os.path.join(out, "gamma_trace.csv"), ["r", "gamma_hat", "floor"],
              [[t.r for t in est.trace], [t.gamma_hat for t in est.trace],
               [t.floor for t in est.trace]])
    bad = [t.r for t in est.trace if t.gamma_hat < t.floor - 1e-9]
    if bad:
        print(f"estimate below the floor at r = {bad}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_bernstein(cfg, built, out):
    from .norms import NormSpec
    from .system import PropertyViolation, bernstein_lower_bound, build_system
    fam = built["family"]
    spec = NormSpec(fam.exponent(), fam.p)
    try:
        system = build_system(cfg["eps"], cfg["N"], spec, fam.p, budget=cfg["budget"],
                              seed=cfg["seed"])
    except PropertyViolation as exc:
        print(f"construction failed: property ({exc.prop}) at level {exc.level}", file=sys.stderr)
        return EXIT_VIOLATION
    write_json(os.path.join(out, "system.json"), _envelope("bernstein", cfg, system.as_dict()))
    try:
        report = bernstein_lower_bound(system, cfg["N"], cfg["samples"], cfg["seed"])
        status = EXIT_OK
    except PropertyViolation as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VIOLATION
    if report.inf_quotient < report.analytic_bound - cfg["tol"]:
        status = EXIT_VIOLATION
    if min(report.link_margins) < -cfg["tol"]:
        status = EXIT_VIOLATION
    write_json(os.path.join(out, "bernstein.json"), _envelope("bernstein", cfg, report.as_dict()))
    return status


COMMANDS = {"rearrange": cmd_rearrange, "norm": cmd_norm, "classify": cmd_classify,
            "gamma": cmd_gamma, "bernstein": cmd_bernstein}


def build_parser():
    parser = argparse.ArgumentParser(prog="varlorentz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, help="random seed (where used)")
        sp.add_argument("--threads", type=int, help="BLAS/OpenMP thread cap")
        sp.add_argument("--tol", type=float, help="main tolerance of the command")
    return parser


def resolve_config(command, args):
    cfg = copy.deepcopy(DEFAULTS[command])
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, file_cfg)
    if args.seed is not None:
        if "seed" not in cfg:
            raise ConfigError(f"{command} takes no seed")
        cfg["seed"] = args.seed
    if args.tol is not None:
        if "tol" not in cfg:
            raise ConfigError(f"{command} takes no tolerance")
        cfg["tol"] = args.tol
    if args.threads is not None:
        cfg["threads"] = args.threads
    return cfg


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args.command, args)
        if cfg.get("threads"):
            for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
                os.environ[var] = str(int(cfg["threads"]))
        built = _validate(args.command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, built, args.out)
    except (ArithmeticError, RuntimeError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
