"""Scenario configuration files (TOML).

Top-level keys describe the experiment; ``[grid]``, ``[gains]``,
``[excitation]`` and ``[disturbance]`` are optional sections. Signals are
inline tables, for example::

    name = "demo"
    n = 2
    m = 1
    t_end = 20.0
    dt = 1e-4
    beta = 0.2
    regressor = [
      {kind = "sine", amplitude = 3.0, hz = 2.0},
      {kind = "piecewise", breaks = [10.0], pieces = [2.5, {kind = "sine", amplitude = 2.5, hz = 2.0}]},
    ]
    theta = [
      {kind = "sum", terms = [2.0, {kind = "sine", amplitude = 1.0, frequency = 1.0}]},
      {kind = "sum", terms = [3.0, {kind = "sine", amplitude = 1.0, frequency = 0.5, phase = 1.5707963267948966}]},
    ]

    [grid]
    T = 0.25

    [gains]
    gamma0 = 100.0
    Gamma = 0.75

With ``m > 1`` each regressor entry is itself a list of ``m`` signals.
"""
from __future__ import annotations

import math
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .estimator import EstimatorGains
from .lift import TimeGridConfig
from .signals import Disturbance, Scenario, signal_from_dict

__all__ = ["ConfigError", "load_config", "scenario_from_mapping", "scenario_to_toml"]

_TOP = {"name", "n", "m", "t_end", "dt", "seed", "beta", "theta0", "normalize",
        "regressor", "theta", "grid", "gains", "excitation", "disturbance"}
_SECTIONS = {
    "grid": {"T", "t_r_plus"},
    "gains": {"gamma0", "Gamma", "sigma", "kappa"},
    "excitation": {"t_e", "Ts"},
    "disturbance": {"kind", "lo", "hi", "table"},
}
_REQUIRED = ("n", "m", "regressor", "theta")


class ConfigError(ValueError):
    """Malformed configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


def _number(cfg, key, section=None, default=None, kind=float):
    where = f"{section}.{key}" if section else key
    if key not in cfg:
        if default is None:
            raise ConfigError(where, "missing")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(where, f"expected a number, got {v!r}")
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(where, f"expected an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(where, "must be finite")
    return float(v)


def scenario_from_mapping(cfg: dict) -> Scenario:
    """Build a :class:`Scenario` from a parsed configuration mapping."""
    unknown = sorted(set(cfg) - _TOP)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for key in _REQUIRED:
        if key not in cfg:
            raise ConfigError(key, "missing")
    sections = {}
    for sec, allowed in _SECTIONS.items():
        body = cfg.get(sec, {})
        if not isinstance(body, dict):
            raise ConfigError(sec, "expected a table")
        extra = sorted(set(body) - allowed)
        if extra:
            raise ConfigError(f"{sec}.{extra[0]}", "unknown key")
        sections[sec] = body

    n = _number(cfg, "n", kind=int)
    m = _number(cfg, "m", kind=int)
    g = sections["grid"]
    T = _number(g, "T", "grid", 0.25)
    try:
        grid = TimeGridConfig(T, _number(g, "t_r_plus", "grid", 0.0))
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None

    ga = sections["gains"]
    Gamma = ga.get("Gamma", 0.75)
    try:
        G = np.asarray(Gamma, dtype=float)
        if G.ndim == 0:
            G = float(G) * np.eye(n)
        gains = EstimatorGains(_number(ga, "gamma0", "gains", 100.0), G,
                               _number(ga, "sigma", "gains", 1e-4),
                               _number(ga, "kappa", "gains", 1e-9))
    except (TypeError, ValueError) as exc:
        raise ConfigError("gains", str(exc)) from None

    ds = sections["disturbance"]
    try:
        table = signal_from_dict(ds["table"]) if "table" in ds else None
        disturbance = Disturbance(ds.get("kind", "none"), float(ds.get("lo", 0.0)),
                                  float(ds.get("hi", 0.0)), table)
    except (TypeError, ValueError) as exc:
        raise ConfigError("disturbance", str(exc)) from None

    ex = sections["excitation"]
    t_end = _number(cfg, "t_end", default=20.0)
    beta = _number(cfg, "beta", default=0.05 / T)
    normalize = cfg.get("normalize", False)
    if not isinstance(normalize, bool):
        raise ConfigError("normalize", "expected true or false")
    name = cfg.get("name", "custom")
    if not isinstance(name, str):
        raise ConfigError("name", "expected a string")
    kwargs = dict(
        n=n, m=m, disturbance=disturbance, t_end=t_end, dt=_number(cfg, "dt", default=1e-4),
        seed=_number(cfg, "seed", default=0, kind=int), grid=grid, gains=gains, beta=beta,
        theta0=cfg.get("theta0"), normalize=normalize, name=name,
        t_e=_number(ex, "t_e", "excitation", t_end), Ts=_number(ex, "Ts", "excitation", 0.1),
    )
    for key in ("regressor", "theta"):
        if not isinstance(cfg[key], list):
            raise ConfigError(key, "expected a list of signals")
    regressor = cfg["regressor"]
    for i, row in enumerate(regressor):
        _probe_signal(row, f"regressor[{i}]")
    for i, s in enumerate(cfg["theta"]):
        _probe_signal(s, f"theta[{i}]")
    try:
        return Scenario(regressor=regressor, theta=cfg["theta"], **kwargs)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        key = next((k for k in ("regressor", "theta0", "theta", "Gamma", "t_e", "dt", "beta")
                    if k in msg), "scenario")
        raise ConfigError(key, msg) from None


def _probe_signal(spec, where):
    items = spec if isinstance(spec, list) else [spec]
    for j, s in enumerate(items):
        try:
            signal_from_dict(s)
        except (TypeError, ValueError, KeyError) as exc:
            loc = where if not isinstance(spec, list) else f"{where}[{j}]"
            raise ConfigError(loc, str(exc)) from None


def load_config(path) -> Scenario:
    """Read a TOML scenario file."""
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<syntax>", str(exc)) from None
    return scenario_from_mapping(cfg)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k} = {_toml_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def scenario_to_toml(sc: Scenario) -> str:
    """Serialize a scenario so that :func:`load_config` reproduces it."""
    if sc.m == 1:
        regressor = [row[0].to_dict() for row in sc.regressor]
    else:
        regressor = [[s.to_dict() for s in row] for row in sc.regressor]
    lines = [
        f"name = {_toml_value(sc.name)}",
        f"n = {sc.n}",
        f"m = {sc.m}",
        f"t_end = {_toml_value(sc.t_end)}",
        f"dt = {_toml_value(sc.dt)}",
        f"seed = {sc.seed}",
        f"beta = {_toml_value(sc.beta)}",
        f"theta0 = {_toml_value(list(sc.theta0))}",
        f"normalize = {_toml_value(sc.normalize)}",
        "regressor = [",
        *[f"  {_toml_value(r)}," for r in regressor],
        "]",
        "theta = [",
        *[f"  {_toml_value(s.to_dict())}," for s in sc.theta],
        "]",
        "",
        "[grid]",
        f"T = {_toml_value(sc.grid.T)}",
        f"t_r_plus = {_toml_value(sc.grid.t_r_plus)}",
        "",
        "[gains]",
        f"gamma0 = {_toml_value(sc.gains.gamma0)}",
        f"Gamma = {_toml_value(sc.gains.Gamma.tolist())}",
        f"sigma = {_toml_value(sc.gains.sigma)}",
        f"kappa = {_toml_value(sc.gains.kappa)}",
        "",
        "[excitation]",
        f"t_e = {_toml_value(sc.t_e)}",
        f"Ts = {_toml_value(sc.Ts)}",
        "",
        "[disturbance]",
    ]
    dist = {k: v for k, v in sc.disturbance.to_dict().items() if v is not None}
    lines += [f"{k} = {_toml_value(v)}" for k, v in dist.items()]
    return "\n".join(lines) + "\n"
