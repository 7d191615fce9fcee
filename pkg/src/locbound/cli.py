"""Command-line front end: ``locbound <mode> --config PATH [--seed N] [--out PATH] [--workers N]``.

Config files are flat ``key = value`` lines; ``#`` starts a comment.  Every
problem in a file is reported at once, each with its line number.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import __version__
from .bounds import evaluate_bounds, oracle_suite
from .crb import avg_crb
from .errors import ConfigError, LocboundError
from .mlsim import GridSpec, MlSimConfig, Sweep, run_mse
from .model import SPEED_OF_LIGHT, ChannelParams, Pulse, effective_bandwidth, snr_from_db
from .numerics import QuadratureSpec
from .seeding import RNG_ALGORITHM

MODES = ("bounds", "avg-crb", "ml-sim", "verify")
SWEEP_KEYS = ("snr_db", "gamma", "lambda", "t_dur", "we")
CSV_COLUMNS = ("sweep_value", "crb_lb", "crb_lb_w", "crb_lb_n", "avg_crb_mean",
               "avg_crb_stderr", "avg_crb_median", "mse", "mse_stderr", "excluded_trials")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


@dataclass(frozen=True)
class SweepSpec:
    param: str = "snr_db"
    start: float = 50.0
    stop: float = 50.0
    points: int = 1
    scale: str = "linear"

    def values(self):
        if self.points == 1:
            return (float(self.start),)
        if self.scale == "log":
            v = np.geomspace(self.start, self.stop, self.points)
        else:
            v = np.linspace(self.start, self.stop, self.points)
        return tuple(float(x) for x in v)


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment; defaults are the standard simulation setting."""

    mode: str | None = None
    gamma: float = 4.0
    snr_db: float = 50.0
    t_dur: float | None = 1e-6
    we: float | None = None
    c: float = SPEED_OF_LIGHT
    lam: float = 0.01
    trials: int = 200
    sensors_per_trial: int = 1000
    sweep: SweepSpec = SweepSpec()
    master_seed: int = 0
    output: str | None = None
    grid: GridSpec = GridSpec()
    quad_rel_tol: float = 1e-8

    def point(self, value):
        """(gamma, rho, we, t_dur, lam) at one sweep value."""
        p = {"gamma": self.gamma, "snr_db": self.snr_db, "t_dur": self.t_dur,
             "we": self.we, "lambda": self.lam}
        p[self.sweep.param] = value
        if self.sweep.param == "t_dur":
            p["we"] = None
        we = p["we"] if p["we"] is not None else effective_bandwidth(Pulse(p["t_dur"]))
        return p["gamma"], snr_from_db(p["snr_db"]), we, p["t_dur"], p["lambda"]

    def channel(self, value):
        g, rho, we, _, lam = self.point(value)
        return ChannelParams(g, we, rho, self.c), lam

    def echo(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _num(text):
    return float(text)


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text}")
    return int(v)


_KEYS = {
    "mode": str, "gamma": _num, "snr_db": _num, "t_dur": _num, "we": _num, "c": _num,
    "lambda": _num, "trials": _int, "sensors_per_trial": _int,
    "sweep_param": str, "sweep_start": _num, "sweep_stop": _num, "sweep_points": _int,
    "sweep_scale": str, "master_seed": _int, "output": str,
    "grid_half_width": _num, "grid_step": _num, "grid_refine": _int, "quad_rel_tol": _num,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a ``key = value`` config.

    Raises :class:`ConfigError` listing every unknown key, duplicate key,
    malformed value and invariant violation with its line number.
    """
    problems = []
    seen = {}
    vals = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append((no, f"expected 'key = value', got {line!r}"))
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            problems.append((no, f"unknown key {key!r}"))
            continue
        if key in seen:
            problems.append((no, f"duplicate key {key!r} (lines {seen[key]} and {no})"))
            continue
        seen[key] = no
        try:
            vals[key] = _KEYS[key](value)
        except ValueError:
            problems.append((no, f"bad value for {key!r}: {value!r}"))

    def bad(key, msg):
        problems.append((seen.get(key, 0), msg))

    cfg = {}
    for key in ("gamma", "snr_db", "c", "trials", "sensors_per_trial", "master_seed",
                "output", "quad_rel_tol", "mode"):
        if key in vals:
            cfg[key] = vals[key]
    if "lambda" in vals:
        cfg["lam"] = vals["lambda"]
    if "t_dur" in vals and "we" in vals:
        bad("we", "give either t_dur or we, not both")
    if "we" in vals:
        cfg["we"], cfg["t_dur"] = vals["we"], None
    elif "t_dur" in vals:
        cfg["t_dur"] = vals["t_dur"]

    mode = vals.get("mode")
    if mode is not None and mode not in MODES:
        bad("mode", f"mode must be one of {', '.join(MODES)}")

    base = ExperimentConfig(**{k: v for k, v in cfg.items()})
    param = vals.get("sweep_param", "snr_db")
    if param not in SWEEP_KEYS:
        bad("sweep_param", f"sweep_param must be one of {', '.join(SWEEP_KEYS)}")
        param = "snr_db"
    default_start = {"snr_db": base.snr_db, "gamma": base.gamma, "lambda": base.lam,
                     "t_dur": base.t_dur, "we": base.we}[param]
    start = vals.get("sweep_start", default_start)
    stop = vals.get("sweep_stop", start)
    points = vals.get("sweep_points", 1 if "sweep_stop" not in vals else 2)
    scale = vals.get("sweep_scale", "linear")
    if param == "we" and base.we is None:
        bad("sweep_param", "sweeping we needs we (not t_dur) in the config")
    if param == "t_dur" and base.t_dur is None:
        bad("sweep_param", "sweeping t_dur needs t_dur (not we) in the config")
    if start is None:
        start = stop = 1.0
    if points < 1:
        bad("sweep_points", "sweep_points must be >= 1")
        points = 1
    if scale not in ("linear", "log"):
        bad("sweep_scale", "sweep_scale must be linear or log")
        scale = "linear"
    if scale == "log" and not (start > 0 and stop > 0):
        bad("sweep_scale", "a log sweep needs positive start and stop")
        scale = "linear"
    sweep = SweepSpec(param, float(start), float(stop), int(points), scale)

    grid_kw = {"half_width": vals.get("grid_half_width", 30.0),
               "step": vals.get("grid_step", 2.0), "refine": vals.get("grid_refine", 6)}
    try:
        grid = GridSpec(**grid_kw)
    except LocboundError as exc:
        bad(next((k for k in ("grid_half_width", "grid_step", "grid_refine") if k in seen),
                 "grid_step"), str(exc))
        grid = GridSpec()

    # invariants; a swept parameter is checked at both ends of the sweep
    current = {"gamma": base.gamma, "lambda": base.lam, "t_dur": base.t_dur,
               "we": base.we, "snr_db": base.snr_db}
    checks = {
        "gamma": (lambda v: v > 2, "gamma must be > 2 (the received-power sum "
                                   "of an infinite network diverges for gamma <= 2)"),
        "lambda": (lambda v: v > 0, "lambda must be > 0"),
        "t_dur": (lambda v: v is None or v > 0, "t_dur must be > 0"),
        "we": (lambda v: v is None or v >= 0, "we must be >= 0"),
        "snr_db": (lambda v: math.isfinite(v), "snr_db must be finite"),
    }
    for key, (ok, msg) in checks.items():
        if key == param:
            for end, v in (("sweep_start", sweep.start), ("sweep_stop", sweep.stop)):
                if not ok(v):
                    bad(end if end in seen else key, f"{msg} (sweep {end.split('_')[1]})")
        elif not ok(current[key]):
            bad(key, msg)
    if not base.c > 0:
        bad("c", "c must be > 0")
    if base.trials < 1:
        bad("trials", "trials must be >= 1")
    if base.sensors_per_trial < 2:
        bad("sensors_per_trial", "sensors_per_trial must be >= 2")
    if not 0 <= base.master_seed < 2**64:
        bad("master_seed", "master_seed must be a 64-bit unsigned integer")
    if not base.quad_rel_tol > 0:
        bad("quad_rel_tol", "quad_rel_tol must be > 0")
    if mode == "ml-sim" and (base.we is not None or param == "we"):
        bad("we", "ml-sim needs the pulse duration t_dur, not we")

    if problems:
        raise ConfigError(sorted(problems))
    return replace(base, sweep=sweep, grid=grid)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _bounds_row(args):
    cfg, value = args
    ch, lam = cfg.channel(value)
    spec = QuadratureSpec(rel_tol=cfg.quad_rel_tol)
    try:
        r = evaluate_bounds(lam, ch, spec)
    except (LocboundError, ArithmeticError, ValueError) as exc:
        return {}, f"{value:g}: {exc}"
    return {"crb_lb": r.crb_lb, "crb_lb_w": r.crb_lb_w, "crb_lb_n": r.crb_lb_n}, None


def _avg_row(args):
    cfg, value, workers = args
    row, err = _bounds_row((cfg, value))
    ch, lam = cfg.channel(value)
    try:
        a = avg_crb(lam, ch, cfg.trials, cfg.sensors_per_trial, cfg.master_seed, workers)
    except (LocboundError, ArithmeticError, ValueError) as exc:
        return row, f"{value:g}: {exc}"
    row.update(avg_crb_mean=a.mean, avg_crb_stderr=a.std_err, avg_crb_median=a.median,
               excluded_trials=a.excluded)
    return row, err


def _ml_rows(cfg, workers):
    sweep_param = cfg.sweep.param
    if cfg.t_dur is None:
        raise ConfigError([(0, "ml-sim needs t_dur")])
    base = MlSimConfig.build(gamma=cfg.gamma, snr_db=cfg.snr_db, t_dur=cfg.t_dur, lam=cfg.lam,
                             sensors_per_trial=cfg.sensors_per_trial, trials=cfg.trials,
                             grid=cfg.grid, master_seed=cfg.master_seed, c=cfg.c)
    curve = run_mse(base, Sweep(sweep_param, cfg.sweep.values()), workers)
    rows = []
    for i in range(len(curve.values)):
        rows.append({"crb_lb": curve.crb_lb[i], "crb_lb_w": curve.crb_lb_w[i],
                     "crb_lb_n": curve.crb_lb_n[i], "avg_crb_mean": curve.avg_crb[i],
                     "avg_crb_stderr": curve.avg_crb_stderr[i],
                     "avg_crb_median": curve.avg_crb_median[i], "mse": curve.mse[i],
                     "mse_stderr": curve.std_err[i], "excluded_trials": curve.excluded[i]})
    return rows


def compute_rows(cfg: ExperimentConfig, workers: int = 1):
    """Rows (dicts keyed by CSV column) and per-point failure messages."""
    values = cfg.sweep.values()
    failures = []
    if cfg.mode == "bounds":
        jobs = [(cfg, v) for v in values]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(workers) as ex:
                results = list(ex.map(_bounds_row, jobs))
        else:
            results = [_bounds_row(j) for j in jobs]
    elif cfg.mode == "avg-crb":
        results = [_avg_row((cfg, v, workers)) for v in values]
    elif cfg.mode == "ml-sim":
        try:
            results = [(r, None) for r in _ml_rows(cfg, workers)]
        except (LocboundError, ArithmeticError, ValueError) as exc:
            results = [({}, f"sweep: {exc}")] * len(values)
    else:
        raise ValueError(f"mode {cfg.mode!r} produces no CSV")
    rows = []
    for v, (row, err) in zip(values, results):
        rows.append(dict(row, sweep_value=v))
        if err:
            failures.append(err)
    return rows, failures


def render_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(row.get(c)) for c in CSV_COLUMNS) + "\n")
    return buf.getvalue()


def run_verify(cfg: ExperimentConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    checks = oracle_suite(QuadratureSpec(rel_tol=cfg.quad_rel_tol))
    width = max(len(c.name) for c in checks)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        tag = " (informational)" if c.informational else ""
        out.write(f"{c.name:<{width}}  {status}  {c.detail}{tag}\n")
    hard_fail = any(not c.passed and not c.informational for c in checks)
    return EXIT_NUMERIC if hard_fail else EXIT_OK


def run(cfg: ExperimentConfig, workers: int = 1, out=None) -> int:
    """Run one experiment, writing the CSV (and a ``.meta.json`` sidecar) to
    ``cfg.output``, or the CSV to ``out`` (default stdout) when no output path is set."""
    out = sys.stdout if out is None else out
    if cfg.mode == "verify":
        return run_verify(cfg, out)
    t0 = time.perf_counter()
    rows, failures = compute_rows(cfg, workers)
    text = render_csv(rows)
    if cfg.output is None:
        out.write(text)
    else:
        meta = {
            "config": cfg.echo(),
            "rng_algorithm": RNG_ALGORITHM,
            "tool_version": __version__,
            "numpy_version": np.__version__,
            "python_version": platform.python_version(),
            "wall_time_s": time.perf_counter() - t0,
            "failed_points": failures,
        }
        try:
            with open(cfg.output, "w", newline="\n", encoding="utf-8") as fh:
                fh.write(text)
            with open(cfg.output + ".meta.json", "w", encoding="utf-8") as fh:
                json.dump(meta, fh, indent=2, default=str)
                fh.write("\n")
        except OSError as exc:
            sys.stderr.write(f"locbound: cannot write output: {exc}\n")
            return EXIT_IO
    for f in failures:
        sys.stderr.write(f"locbound: point failed: {f}\n")
    return EXIT_NUMERIC if failures else EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="locbound",
                                 description="Localisation error bounds in Poisson sensor networks.")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="key = value config file (defaults apply if omitted)")
    ap.add_argument("--seed", type=int, help="override master_seed")
    ap.add_argument("--out", help="CSV output path (stdout if omitted)")
    ap.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    args = ap.parse_args(argv)

    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            sys.stderr.write(f"locbound: cannot read config: {exc}\n")
            return EXIT_IO
    try:
        cfg = parse_config(text)
        if cfg.mode is not None and cfg.mode != args.mode:
            raise ConfigError([(0, f"config mode {cfg.mode!r} conflicts with command "
                                   f"mode {args.mode!r}")])
        cfg = replace(cfg, mode=args.mode)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError([(0, "--seed must be a 64-bit unsigned integer")])
            cfg = replace(cfg, master_seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, output=args.out)
        if args.workers < 1:
            raise ConfigError([(0, "--workers must be >= 1")])
        if cfg.mode == "ml-sim" and cfg.t_dur is None:
            raise ConfigError([(0, "ml-sim needs t_dur, not we")])
    except ConfigError as exc:
        sys.stderr.write(f"locbound: {exc}\n")
        return EXIT_CONFIG
    try:
        return run(cfg, args.workers)
    except (LocboundError, ArithmeticError) as exc:
        sys.stderr.write(f"locbound: numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
