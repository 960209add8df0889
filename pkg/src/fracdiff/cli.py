"""Command-line front end: ``fracdiff {run, verify, fit, ml-eval}``.

Exit codes: 0 success, 1 a verify suite failed, 2 invalid configuration
(the message names the offending field), 3 numerical failure.
"""

import argparse
import json
import math
import platform
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__, io, kernels
from .dispersion import CharPolynomial, ClosedDispersion, WeylDispersion, cumulant_rates, find_dispersion, multi_indices
from .errors import ConfigError, NumericalError
from .evolution import (
    MAX_EPSILON,
    caputo_exact_spectral,
    caputo_l1_evolve,
    perturbative_evolve,
    spectral_propagate,
)
from .fracops import TimeSignal, caputo_derivative, rl_derivative
from .grid import SpatialGrid, make_gaussian
from .mittag_leffler import mittag_leffler, region
from .moments import cumulant_series, fit_linear, fit_power_law, variance_series
from .verify import SUITES, run_suite

EXPERIMENTS = ("spectral", "weyl", "caputo_exact", "caputo_l1", "perturbative", "derivative_test", "dispersion_scan")
EVOLVING = ("spectral", "weyl", "caputo_exact", "caputo_l1", "perturbative")


# ---------------------------------------------------------------- configuration


def _schema():
    text = resources.files("fracdiff").joinpath("schema/run_config.schema.json").read_text()
    return json.loads(text)


def _field_path(err):
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1]
        parts.append(missing)
    elif err.validator == "additionalProperties":
        extra = err.message.split("'")[1] if "'" in err.message else "?"
        parts.append(extra)
    return ".".join(parts) or "<root>"


def load_config(path):
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"not valid JSON ({exc})") from None
    return resolve_config(raw)


def _require(cond, field, message):
    if not cond:
        raise ConfigError(field, message)


def _as_vector(value, dim, field):
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.size == 1:
        v = np.repeat(v, dim)
    _require(v.size == dim, field, f"expected {dim} components, got {v.size}")
    return [float(x) for x in v]


def _step_count(t_max, dt, field):
    n = t_max / dt
    _require(abs(n - round(n)) <= 1e-9 * max(1.0, n), field, f"t_max={t_max} is not a whole number of steps dt={dt}")
    return int(round(n))


def resolve_config(raw):
    """Schema check, defaults, then every numeric precondition; returns a new dict."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(_field_path(err), err.message)

    exp = raw["experiment"]
    g = dict(raw["grid"])
    n = g["n"]
    _require(n >= 8 and n & (n - 1) == 0, "grid.n", f"must be a power of two >= 8, got {n}")
    _require(g["length"] > 0, "grid.length", "must be positive")
    dim = g["dim"]

    init = {"mean": 0.0, "sigma": 1.0, **raw.get("initial", {})}
    init["mean"] = _as_vector(init["mean"], dim, "initial.mean")
    _require(init["sigma"] > 0, "initial.sigma", f"must be positive, got {init['sigma']}")
    half = 0.5 * g["length"]
    _require(
        all(abs(m) + 6.0 * init["sigma"] < half for m in init["mean"]),
        "initial.sigma",
        f"|mean| + 6 sigma must stay inside the half box {half} (grid.length = {g['length']})",
    )

    ev = dict(raw["evolution"])
    _require(ev["t_max"] > 0, "evolution.t_max", "must be positive")
    ev.setdefault("n_snapshots", 100)
    _require(ev["n_snapshots"] >= 1, "evolution.n_snapshots", "must be >= 1")
    if exp in ("weyl", "caputo_exact", "caputo_l1", "derivative_test"):
        _require("beta" in ev, "evolution.beta", f"required for experiment {exp!r}")
        b = ev["beta"]
        if exp == "weyl":
            _require(0 < b < 2, "evolution.beta", f"must lie in (0, 2), got {b}")
        elif exp == "derivative_test":
            _require(0 < b < 1, "evolution.beta", f"must lie in (0, 1), got {b}")
        else:
            _require(0 < b <= 1, "evolution.beta", f"must lie in (0, 1], got {b}")
    if exp == "perturbative":
        _require("epsilon" in ev, "evolution.epsilon", "required for experiment 'perturbative'")
        e = ev["epsilon"]
        _require(0 <= e <= MAX_EPSILON, "evolution.epsilon", f"must lie in [0, {MAX_EPSILON}], got {e}")
    if exp in ("caputo_l1", "perturbative", "derivative_test"):
        _require("dt" in ev, "evolution.dt", f"required for experiment {exp!r}")
        _require(ev["dt"] > 0, "evolution.dt", "must be positive")
        steps = _step_count(ev["t_max"], ev["dt"], "evolution.dt")
        _require(steps >= 2, "evolution.dt", "need at least two time steps")
        ev.setdefault("snapshot_stride", max(1, steps // ev["n_snapshots"]))
        _require(ev["snapshot_stride"] >= 1, "evolution.snapshot_stride", "must be >= 1")
        _require(steps % ev["snapshot_stride"] == 0, "evolution.snapshot_stride", f"must divide the {steps} steps")

    disp = raw.get("dispersion")
    if exp in ("spectral", "dispersion_scan"):
        _require(disp is not None, "dispersion", f"required for experiment {exp!r}")
    if disp is not None:
        disp = dict(disp)
        kind = disp["kind"]
        if kind == "closed":
            disp["drift"] = _as_vector(disp.get("drift", 0.0), dim, "dispersion.drift")
            disp.setdefault("diffusivity", 0.0)
            disp.setdefault("mu3", 0.0)
            _require(disp["diffusivity"] >= 0, "dispersion.diffusivity", "must be nonnegative")
        elif kind == "weyl":
            _require("beta" in disp, "dispersion.beta", "required for kind 'weyl'")
            _require(0 < disp["beta"] < 2, "dispersion.beta", f"must lie in (0, 2), got {disp['beta']}")
        else:
            _require("coefficients" in disp, "dispersion.coefficients", "required for kind 'polynomial'")
            _require(dim == 1, "dispersion.coefficients", "polynomial dispersions are supported in 1-D only")
            _require(any(c != 0 for c in disp["coefficients"][0]), "dispersion.coefficients", "leading s-coefficient is zero")
        disp.setdefault("allow_nonunique", False)

    sig = {"power": 2.0, **raw.get("signal", {})}
    if exp == "derivative_test":
        _require(sig["power"] >= 0, "signal.power", "must be >= 0")

    an = {"moment_orders": [2], "fit_window": None, "domain_check": True, "max_rate_order": 4, **raw.get("analysis", {})}
    for i, o in enumerate(an["moment_orders"]):
        _require(1 <= o <= 4, f"analysis.moment_orders.{i}", f"orders must be 1..4, got {o}")
    _require(1 <= an["max_rate_order"] <= 4, "analysis.max_rate_order", "must be 1..4")
    if an["fit_window"] is not None:
        lo, hi = an["fit_window"]
        _require(0 < lo < hi <= ev["t_max"], "analysis.fit_window", f"need 0 < lo < hi <= t_max, got {an['fit_window']}")

    out = {"directory": "fracdiff_out", "formats": ["csv", "json"], "snapshots": False, **raw.get("output", {})}
    return {
        "experiment": exp,
        "grid": g,
        "initial": init,
        "evolution": ev,
        "dispersion": disp,
        "signal": sig,
        "analysis": an,
        "output": out,
        "seed": raw.get("seed", 0),
    }


# ---------------------------------------------------------------- experiments


def build_dispersion(d, dim):
    if d["kind"] == "closed":
        return ClosedDispersion(tuple(d["drift"]), d["diffusivity"], d["mu3"], dim)
    if d["kind"] == "weyl":
        return WeylDispersion(d["beta"], dim)
    # rows are ascending powers of the gradient symbol q = ik
    rows = [[c * 1j**p for p, c in enumerate(row)] for row in d["coefficients"]]
    return CharPolynomial.from_k_polynomials(rows)


def _grid_and_initial(cfg):
    g = cfg["grid"]
    grid = SpatialGrid(g["dim"], g["n"], g["length"])
    return grid, make_gaussian(grid, cfg["initial"]["mean"], cfg["initial"]["sigma"])


def _snapshot_times(ev):
    return np.linspace(0.0, ev["t_max"], ev["n_snapshots"] + 1)


def evolve(cfg):
    exp = cfg["experiment"]
    ev = cfg["evolution"]
    grid, psi0 = _grid_and_initial(cfg)
    if exp == "spectral":
        disp = build_dispersion(cfg["dispersion"], grid.dim)
        if isinstance(disp, CharPolynomial):
            disp = find_dispersion(disp, grid.axis_wavenumbers)
        return spectral_propagate(psi0, disp, _snapshot_times(ev), cfg["dispersion"]["allow_nonunique"]), disp
    if exp == "weyl":
        disp = WeylDispersion(ev["beta"], grid.dim)
        return spectral_propagate(psi0, disp, _snapshot_times(ev)), disp
    if exp == "caputo_exact":
        return caputo_exact_spectral(psi0, ev["beta"], _snapshot_times(ev)), None
    if exp == "caputo_l1":
        steps = _step_count(ev["t_max"], ev["dt"], "evolution.dt")
        return caputo_l1_evolve(psi0, ev["beta"], ev["dt"], steps, ev["snapshot_stride"]), None
    if exp == "perturbative":
        stride = ev["snapshot_stride"]
        steps = _step_count(ev["t_max"], ev["dt"], "evolution.dt")
        times = ev["dt"] * stride * np.arange(steps // stride + 1)
        return perturbative_evolve(psi0, ev["epsilon"], times, substeps=stride).total, None
    raise ValueError(f"experiment {exp!r} does not evolve a density")


def _alpha_tag(alpha):
    return "".join(str(a) for a in alpha)


class _Writer:
    def __init__(self, directory, formats):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.formats = formats
        self.artifacts = []

    def series(self, name, series):
        if "csv" in self.formats:
            io.write_series(self.dir / f"{name}.csv", series)
            self.artifacts.append(f"{name}.csv")
        if "json" in self.formats:
            io.dump_json(io.series_dict(series), self.dir / f"{name}.json")
            self.artifacts.append(f"{name}.json")

    def json(self, name, obj):
        io.dump_json(obj, self.dir / f"{name}.json")
        self.artifacts.append(f"{name}.json")

    def time_signal(self, name, sig):
        if "csv" in self.formats:
            io.write_time_signal(self.dir / f"{name}.csv", sig)
            self.artifacts.append(f"{name}.csv")
        if "json" in self.formats:
            self.json(name, {"t": sig.times, "re": sig.samples.real, "im": sig.samples.imag})


def _numerical(stage, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except NumericalError:
        raise
    except (ValueError, ArithmeticError, KeyError) as exc:
        raise NumericalError(stage, str(exc)) from exc


def _rates_dict(rates):
    return {
        _alpha_tag(a): {"value": r.value if r.flag != "divergent" else None, "flag": r.flag} for a, r in rates.items()
    }


def run_experiment(cfg, writer):
    exp = cfg["experiment"]
    an = cfg["analysis"]
    summary = {"experiment": exp}
    if exp == "derivative_test":
        ev = cfg["evolution"]
        beta, p, dt = ev["beta"], cfg["signal"]["power"], ev["dt"]
        n = _step_count(ev["t_max"], dt, "evolution.dt") + 1
        sig = TimeSignal.sample(lambda t: t**p, 0.0, dt, n)
        cap = _numerical("fractional_ops", caputo_derivative, sig, beta)
        rl = _numerical("fractional_ops", rl_derivative, sig, beta)
        t = sig.times
        if p == 0:
            exact_c = np.zeros_like(t)
            with np.errstate(divide="ignore"):
                exact_rl = np.where(t > 0, t ** (-beta), np.inf) / math.gamma(1.0 - beta)
        else:
            exact_c = math.gamma(p + 1) / math.gamma(p + 1 - beta) * t ** (p - beta)
            exact_rl = exact_c
        writer.time_signal("caputo", cap)
        writer.time_signal("rl", rl)
        far = t >= 5 * dt
        summary["caputo_max_abs_error"] = float(np.max(np.abs(cap.samples[far] - exact_c[far])))
        summary["rl_max_abs_error"] = float(np.max(np.abs(rl.samples[far] - exact_rl[far])))
        writer.json("summary", summary)
        return
    if exp == "dispersion_scan":
        grid, _ = _grid_and_initial(cfg)
        disp = build_dispersion(cfg["dispersion"], grid.dim)
        if grid.dim == 1:
            kvecs = np.sort(grid.axis_wavenumbers)[:, None]
        else:
            kvecs = np.stack([k.ravel() for k in grid.wavenumbers], axis=-1)
        if isinstance(disp, CharPolynomial):
            disp = _numerical("dispersion", find_dispersion, disp, kvecs)
        io.write_dispersion(writer.dir / "dispersion.csv", disp, kvecs)
        writer.artifacts.append("dispersion.csv")
        status = disp.status(kvecs)
        summary["status_counts"] = {s: int(np.sum(status == s)) for s in sorted(set(status))}
        if hasattr(disp, "residuals"):
            summary["max_residual"] = float(np.max(disp.residuals()))
        summary["cumulant_rates"] = _rates_dict(_numerical("dispersion", cumulant_rates, disp, an["max_rate_order"]))
        writer.json("summary", summary)
        return

    run, disp = _numerical("evolution", evolve, cfg)
    if cfg["output"]["snapshots"]:
        io.write_evolution(writer.dir / "snapshots", run)
        writer.artifacts.append("snapshots/manifest.json")
    var = _numerical("moments", variance_series, run, an["domain_check"])
    writer.series("variance", var)
    summary["variance_divergent_times"] = int(np.sum(var.divergent))
    window = tuple(an["fit_window"]) if an["fit_window"] is not None else None
    var0 = float(var.values[0].real)
    try:
        fit = fit_power_law(var, var0, window)
    except ValueError as exc:
        summary["fit_error"] = str(exc)
    else:
        writer.json("fit", fit.as_dict())
    fits = {}
    for order in an["moment_orders"]:
        for alpha in multi_indices(run.grid.dim, order):
            if sum(alpha) != order:
                continue
            s = _numerical("moments", cumulant_series, run, alpha)
            writer.series(f"cumulant_{_alpha_tag(alpha)}", s)
            lf = fit_linear(s)
            fits[_alpha_tag(alpha)] = {"slope": lf.slope, "intercept": lf.intercept, "r2": lf.r_squared}
    summary["cumulant_linear_fits"] = fits
    if disp is not None:
        summary["cumulant_rates"] = _rates_dict(_numerical("dispersion", cumulant_rates, disp, an["max_rate_order"]))
    writer.json("summary", summary)


def _manifest(cfg, backend, threads, artifacts):
    return {
        "config": cfg,
        "versions": {
            "fracdiff": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "kernel_backend": backend,
        "threads": threads,
        "artifacts": sorted(artifacts),
    }


# ---------------------------------------------------------------- subcommands


def _threads(args):
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        kernels.set_num_threads(args.threads)
    try:
        return kernels.get_num_threads()
    except ValueError as exc:
        raise ConfigError("FRACDIFF_THREADS", str(exc)) from None


def cmd_run(args):
    if not args.config:
        raise ConfigError("--config", "run needs a configuration file")
    cfg = load_config(args.config)
    threads = _threads(args)
    if args.format:
        cfg["output"]["formats"] = [args.format]
    out = args.out or cfg["output"]["directory"]
    writer = _Writer(out, cfg["output"]["formats"])
    run_experiment(cfg, writer)
    io.dump_json(_manifest(cfg, kernels.BACKEND, threads, writer.artifacts + ["manifest.json"]), writer.dir / "manifest.json")
    print(f"wrote {len(writer.artifacts) + 1} artifacts to {writer.dir}")
    return 0


def cmd_verify(args):
    seed = 0
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("--config", str(exc)) from None
        seed = raw.get("seed", 0) if isinstance(raw, dict) else 0
        if not isinstance(seed, int):
            raise ConfigError("seed", "must be an integer")
    _threads(args)
    report = _numerical("verify", run_suite, args.suite, seed)
    text = io.dump_json(report)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"verify_{args.suite}.json").write_text(text)
    sys.stdout.write(text)
    return 0 if report["passed"] else 1


def cmd_fit(args):
    try:
        series = io.read_series(args.series)
    except (OSError, ValueError) as exc:
        raise ConfigError("series", str(exc)) from None
    var0 = args.var0 if args.var0 is not None else (float(series.values[0].real) if series.times[0] == 0.0 else 0.0)
    window = tuple(args.window) if args.window else None
    try:
        fit = fit_power_law(series, var0, window, args.min_points)
    except ValueError as exc:
        raise NumericalError("moments.fit_power_law", str(exc)) from None
    text = io.dump_json(fit.as_dict())
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "fit.json").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_ml_eval(args):
    if not 0 < args.beta < 2:
        raise ConfigError("--beta", f"must lie in (0, 2), got {args.beta}")
    if args.z_min > args.z_max or args.z_max > 0:
        raise ConfigError("--z-max", "need z_min <= z_max <= 0")
    if args.num < 1:
        raise ConfigError("--num", "must be >= 1")
    z = np.linspace(args.z_min, args.z_max, args.num)
    vals = _numerical("mittag_leffler", mittag_leffler, args.beta, z)
    regs = region(args.beta, z) if args.beta != 1.0 else np.full(z.shape, "exp", dtype=object)
    fmt = args.format or "csv"
    if fmt == "csv":
        lines = ["z,value,region"] + [f"{io.fmt(a)},{io.fmt(b)},{r}" for a, b, r in zip(z, vals, regs)]
        text = "\n".join(lines) + "\n"
    else:
        text = io.dump_json({"beta": args.beta, "z": z, "value": vals, "region": list(regs)})
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"ml_eval.{fmt}").write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads (default: $FRACDIFF_THREADS or 1)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")

    p = argparse.ArgumentParser(prog="fracdiff", description="Fractional diffusion laboratory")
    p.add_argument("--version", action="version", version=f"fracdiff {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run a configured experiment")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", parents=[common], help="run a self-check suite")
    v.add_argument("suite", choices=SUITES)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("fit", parents=[common], help="fit Var - var0 = C t^alpha to a series file")
    f.add_argument("series", help="MomentSeries CSV (t, value_re, value_im, divergent_flag) or JSON")
    f.add_argument("--var0", type=float)
    f.add_argument("--window", type=float, nargs=2, metavar=("T_MIN", "T_MAX"))
    f.add_argument("--min-points", type=int, default=8)
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("ml-eval", parents=[common], help="tabulate the Mittag-Leffler function")
    m.add_argument("--beta", type=float, required=True)
    m.add_argument("--z-min", type=float, default=-10.0)
    m.add_argument("--z-max", type=float, default=0.0)
    m.add_argument("--num", type=int, default=101)
    m.set_defaults(func=cmd_ml_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fracdiff: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"fracdiff: numerical failure in {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
