"""Command line interface.

Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, load_config, scenario_to_toml
from .harness import (
    audit_bounds,
    excitation_report,
    preset,
    run_scenario,
    steady_state_error,
    sweep,
    write_csv,
)
from .linalg import NumericalInconsistencyError
from .pipeline import ConfigurationError

__all__ = ["main", "main_entry", "build_parser"]

PROG = "idrem"




def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not serializable: {type(o).__name__}")

    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return str(o)
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2, default=default)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _values(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise argparse.ArgumentTypeError("values must be positive numbers")
    return vals


def _add_source(p, required=False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--config", help="scenario TOML file")
    g.add_argument("--experiment", choices=["1", "2"], help="built-in experiment")


def _add_logging(p):
    p.add_argument("--out", help="trace CSV path")
    p.add_argument("--log-stride", type=_positive_int, default=10,
                   help="log every K-th step (default 10)")
    p.add_argument("--full-rate", action="store_true", help="log every step (same as --log-stride 1)")
    p.add_argument("--report", help="also write the run summary as JSON to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG, description="Time-varying parameter identification with interval-reset mixing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a configured scenario")
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--seed", type=int, help="override the disturbance seed")
    _add_logging(p)

    p = sub.add_parser("repro", help="run a built-in experiment")
    p.add_argument("--experiment", required=True, choices=["1", "2"])
    p.add_argument("--seed", type=int, help="override the disturbance seed")
    _add_logging(p)

    p = sub.add_parser("excitation", help="measure excitation levels of a scenario's regressor")
    _add_source(p, required=True)
    p.add_argument("--ts", type=_positive_float, help="sliding-window width (default from config)")

    p = sub.add_parser("bounds", help="run a scenario and audit it against the error bounds")
    _add_source(p, required=True)
    p.add_argument("--seed", type=int, help="override the disturbance seed")
    p.add_argument("--settle", type=float, default=2.0, help="start of the asymptotic check (s)")
    p.add_argument("--out", help="write the full report to this JSON path")
    p.add_argument("--strict", action="store_true", help="exit 1 when any audit check fails")

    p = sub.add_parser("sweep", help="steady-state error across parameter values")
    _add_source(p)
    p.add_argument("--param", required=True, choices=["T", "gamma0"])
    p.add_argument("--values", required=True, type=_values, help="comma-separated values")
    p.add_argument("--window", type=_positive_float, default=2.0,
                   help="metric window at the end of the excitation window (s)")
    p.add_argument("--t-end", type=_positive_float, help="simulation horizon (default t_e)")
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel runs")
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")

    p = sub.add_parser("export", help="print a built-in experiment as a config file")
    p.add_argument("--experiment", required=True, choices=["1", "2"])
    return parser


def _scenario(args):
    sc = preset(args.experiment) if getattr(args, "experiment", None) else None
    if sc is None:
        sc = load_config(args.config) if getattr(args, "config", None) else preset("exp1")
    if getattr(args, "seed", None) is not None:
        sc = replace(sc, seed=args.seed)
    return sc


def _run_summary(tr, rows):
    sc = tr.scenario
    return {
        "scenario": sc.name,
        "steps": sc.n_steps,
        "rows_logged": rows,
        "theta_hat_final": tr.theta_hat[-1].tolist(),
        "theta_true_final": tr.theta_true[-1].tolist(),
        "steady_state_error": steady_state_error(tr),
        "max_err_after_2s": float(np.max(tr.err[tr.index(min(2.0, sc.t_end)):])),
        "drem_fraction": float(np.mean(tr.branch == 1)),
    }


def _cmd_run(args, out):
    sc = _scenario(args)
    tr = run_scenario(sc)
    stride = 1 if args.full_rate else args.log_stride
    rows = write_csv(tr, args.out, stride) if args.out else len(tr.rows(stride))
    summary = _run_summary(tr, rows)
    if args.out:
        summary["csv"] = args.out
    text = _json(summary)
    if args.report:
        _write_text(args.report, text)
    print(text, file=out)
    return 0


def _cmd_excitation(args, out):
    sc = _scenario(args)
    print(_json(excitation_report(sc, args.ts)), file=out)
    return 0


def _cmd_bounds(args, out):
    sc = _scenario(args)
    rep = audit_bounds(run_scenario(sc), settle=args.settle)
    if args.out:
        _write_text(args.out, _json(rep))
    brief = {k: rep[k] for k in ("scenario", "constants", "notes", "checks", "passed",
                                 "max_err_after_settle", "envelope", "max_err_i_fe_ends")}
    brief["omega_audit"] = rep["omega_audit"]["summary"]
    print(_json(brief), file=out)
    return 1 if args.strict and not rep["passed"] else 0


def _cmd_sweep(args, out):
    sc = _scenario(args)
    rows = sweep(sc, args.param, args.values, window=args.window, t_end=args.t_end, jobs=args.jobs)
    if args.json:
        print(_json(rows), file=out)
        return 0
    print(f"{args.param:>10}  {'beta':>10}  {'steady_state_error':>20}  {'drem_fraction':>13}", file=out)
    for r in rows:
        print(f"{r['value']:>10g}  {r['beta']:>10g}  {r['steady_state_error']:>20.10g}  "
              f"{r['drem_fraction']:>13.4f}", file=out)
    errs = [r["steady_state_error"] for r in rows]
    mono = all(b < a for a, b in zip(errs, errs[1:]))
    print(f"strictly decreasing: {'yes' if mono else 'no'}", file=out)
    return 0


def _cmd_export(args, out):
    print(scenario_to_toml(preset(args.experiment)), end="", file=out)
    return 0


def _write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


_COMMANDS = {"run": _cmd_run, "repro": _cmd_run, "excitation": _cmd_excitation,
             "bounds": _cmd_bounds, "sweep": _cmd_sweep, "export": _cmd_export}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args, out)
    except (ConfigError, ConfigurationError) as exc:
        print(f"{PROG}: usage error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"{PROG}: usage error: no such file: {exc.filename}", file=sys.stderr)
        return 2
    except (NumericalInconsistencyError, FloatingPointError, ValueError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


def main_entry():  # console script
    sys.exit(main())
