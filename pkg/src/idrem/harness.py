"""Simulation harness: presets, runs, CSV traces, bound audits and sweeps."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bounds import (
    BoundInputs,
    compute_constants,
    error_bound_fe,
    error_bound_post,
    lambda_max_norm,
    audit_omega,
)
from .estimator import Branch, EstimatorGains, parameter_error
from .excitation import check_fe
from .lift import TimeGridConfig
from .pipeline import ConfigurationError, IdentificationResult, _steps, identify
from .signals import (
    Constant,
    Disturbance,
    Piecewise,
    Scenario,
    Sine,
    Sum,
    disturbance_samples,
    eval_regressor,
    eval_truth,
    normalize,
    suprema,
)

__all__ = [
    "PRESETS",
    "Trace",
    "preset",
    "run_scenario",
    "write_csv",
    "read_csv",
    "csv_header",
    "excitation_report",
    "bound_inputs_from_run",
    "audit_bounds",
    "steady_state_error",
    "sweep",
]

PRESETS = ("exp1", "exp2")
_ALIASES = {"exp1": "exp1", "1": "exp1", "exp2": "exp2", "2": "exp2"}


def preset(name) -> Scenario:
    """Built-in two-parameter experiments; ``exp2`` adds a uniform disturbance."""
    key = _ALIASES.get(str(name).strip().lower())
    if key is None:
        raise ConfigurationError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
    w = 4.0 * math.pi
    regressor = (
        (Sine(3.0, w),),
        (Piecewise((10.0,), (Constant(2.5), Sine(2.5, w))),),
    )
    theta = (
        Sum((Constant(2.0), Sine(1.0, 1.0))),
        Sum((Constant(3.0), Sine(1.0, 0.5, math.pi / 2))),
    )
    T = 0.25
    disturbance = Disturbance.uniform(-0.5, 0.5) if key == "exp2" else Disturbance()
    return Scenario(
        n=2, m=1, regressor=regressor, theta=theta, disturbance=disturbance,
        t_end=20.0, dt=1e-4, seed=0, grid=TimeGridConfig(T, 0.0),
        gains=EstimatorGains(gamma0=100.0, Gamma=0.75 * np.eye(2), sigma=1e-4, kappa=1e-9),
        beta=0.05 / T, theta0=np.zeros(2), normalize=False, name=key, t_e=10.0, Ts=0.1,
    )


@dataclass
class Trace:
    """Full-rate record of one run; ``rows`` picks the logged subset."""

    scenario: Scenario
    t: np.ndarray  # (N+1,)
    omega: np.ndarray  # (N+1, n, m), after normalization when enabled
    y: np.ndarray  # (N+1, m)
    d: np.ndarray  # (N+1, m), disturbance actually entering y
    theta_true: np.ndarray  # (N+1, n)
    result: IdentificationResult

    @property
    def theta_hat(self):
        return self.result.theta_hat

    @property
    def Omega(self):
        return self.result.Omega

    @property
    def branch(self):
        return self.result.branch

    @property
    def interval(self):
        return self.result.interval

    @property
    def err(self):
        return parameter_error(self.theta_hat, self.theta_true)

    def index(self, t: float) -> int:
        k = int(round(t / self.scenario.dt))
        if not 0 <= k < len(self.t):
            raise ValueError(f"t={t} outside the trace")
        return k

    def rows(self, stride: int = 10) -> np.ndarray:
        """Indices of logged steps: every ``stride``-th step start in ``[0, t_end)``."""
        if stride < 1:
            raise ValueError("log stride must be >= 1")
        return np.arange(0, len(self.t) - 1, stride)


def run_scenario(scenario: Scenario) -> Trace:
    """Simulate ``scenario`` and identify its parameters from the generated data."""
    grid = scenario.grid
    _steps(grid.T, scenario.dt, "T")
    _steps(grid.t_r_plus, scenario.dt, "t_r_plus")
    grid.check_against(scenario.Ts, scenario.t_e)
    t = scenario.times()
    omega = eval_regressor(scenario, t)
    theta, _, _ = eval_truth(scenario, t)
    d = disturbance_samples(scenario)
    y = np.einsum("ki,kim->km", theta, omega) + d
    if scenario.normalize:
        ns = 1.0 / (1.0 + np.sum(omega[:, :, 0] ** 2, axis=1))
        y, omega = normalize(y, omega)
        d = d * ns[:, None]
    res = identify(omega, y, scenario.dt, grid, scenario.beta, scenario.gains, scenario.theta0)
    return Trace(scenario, t, omega, y, d, theta, res)


def csv_header(n: int, m: int) -> list[str]:
    cols = ["t"]
    cols += [f"theta_true_{j}" for j in range(n)]
    cols += [f"theta_hat_{j}" for j in range(n)]
    cols += [f"omega_{j}" for j in range(n)]
    cols += ["y"] if m == 1 else [f"y_{j}" for j in range(m)]
    cols += ["Omega", "branch", "err_inst", "interval"]
    return cols


def _fmt(x) -> str:
    return "%.17g" % x


def write_csv(trace: Trace | None, path, stride: int = 10, *, n: int = 2, m: int = 1) -> int:
    """Write logged rows to ``path``; returns the number of data rows.

    ``trace=None`` writes a header only (for ``n``/``m`` columns).
    """
    path = Path(path)
    if trace is not None:
        n, m = trace.scenario.n, trace.scenario.m
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(csv_header(n, m))
            if trace is None:
                return 0
            idx = trace.rows(stride)
            err = trace.err
            cols = [trace.t[idx, None], trace.theta_true[idx], trace.theta_hat[idx],
                    trace.omega[idx, :, 0], trace.y[idx], trace.Omega[idx, None]]
            floats = np.hstack(cols)
            for r, k in enumerate(idx):
                row = [_fmt(v) for v in floats[r]]
                row.append(Branch(int(trace.branch[k])).name)
                row.append(_fmt(err[k]))
                row.append(str(int(trace.interval[k])))
                w.writerow(row)
            return len(idx)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a trace CSV back into column arrays (``branch`` stays as names)."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data = list(reader)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in data]
        if name == "branch":
            out[name] = np.array(col, dtype=object)
        elif name == "interval":
            out[name] = np.array([int(v) for v in col], dtype=np.int64)
        else:
            out[name] = np.array([float(v) for v in col], dtype=float)
    return out


def excitation_report(scenario: Scenario, Ts: float | None = None, trace: Trace | None = None):
    """Excitation levels on ``[t_r_plus, t_e]`` and on ``[t_e, t_end]`` (when non-empty)."""
    Ts = scenario.Ts if Ts is None else Ts
    if trace is None:
        t = scenario.times()
        omega = eval_regressor(scenario, t)
        if scenario.normalize:
            omega = normalize(np.zeros((len(t), 1)), omega)[1]
    else:
        omega = trace.omega
    dt, grid = scenario.dt, scenario.grid
    fe = check_fe(omega, dt, grid.t_r_plus, scenario.t_e, Ts, grid=grid)
    out = {"fe_window": fe.to_dict(), "post_window": None}
    if scenario.t_end - scenario.t_e >= Ts:
        post = check_fe(omega, dt, scenario.t_e, scenario.t_end, Ts)
        out["post_window"] = post.to_dict()
    omega_max = float(np.max(np.linalg.norm(omega, ord=2, axis=(1, 2))))
    out["omega_max"] = omega_max
    return out


def _fe_intervals(trace: Trace):
    """Interval indices whose whole span lies inside ``[t_r_plus, t_e]``."""
    sc = trace.scenario
    g = sc.grid
    count = int(math.floor((sc.t_e - g.t_r_plus) / g.T + 1e-9))
    return list(range(count))


def bound_inputs_from_run(trace: Trace) -> tuple[BoundInputs, dict]:
    """Evaluate the bound inputs from the scenario suprema and the run's own observations."""
    sc = trace.scenario
    g, n = sc.grid, sc.n
    sup = suprema(sc)
    exc = check_fe(trace.omega, sc.dt, g.t_r_plus, sc.t_e, sc.Ts, grid=g)
    res = trace.result
    spi = _steps(g.T, sc.dt, "T")
    k_r = _steps(g.t_r_plus, sc.dt, "t_r_plus")
    fe = _fe_intervals(trace)
    offsets, omegas, deltas = [], [], []
    for k in fe:
        a, b = k_r + k * spi, k_r + (k + 1) * spi
        seg = res.Omega[a:b]
        hit = np.flatnonzero(seg >= sc.gains.kappa)
        deltas.append(float(np.max(res.lifted_lmax[a:b + 1])))
        if hit.size:
            offsets.append(hit[0] * sc.dt)
            omegas.append(float(seg[hit[0]]))
        else:
            offsets.append(g.T)
            omegas.append(0.0)
    worst = int(np.argmax(offsets)) if offsets else 0
    T0k_offset = float(max(offsets)) if offsets else g.T
    Omega_T0k = float(min(omegas)) if omegas else 0.0
    grid_t = g.t_r_plus + g.T * np.arange(int(math.floor((sc.t_end - g.t_r_plus) / g.T + 1e-9)) + 1)
    theta_grid = eval_truth(sc, grid_t)[0]
    Delta1 = float(np.max(np.linalg.norm(np.diff(theta_grid, axis=0), axis=1))) if len(grid_t) > 1 else 0.0
    omega_max = sup.omega_max
    if sc.normalize:
        omega_max = float(np.max(np.linalg.norm(trace.omega, ord=2, axis=(1, 2))))
    inputs = BoundInputs(
        omega_max=omega_max, Theta_max=sup.Theta_max, Theta_dot_max=sup.Theta_dot_max,
        Theta_ddot_max=sup.Theta_ddot_max, d_max=sup.d_max, alpha2_lifted=exc.lifted.alpha2,
        delta_k=max(deltas) if deltas else 0.0, Lambda_max=lambda_max_norm(g.T, n), T=g.T,
        beta=sc.beta, gamma0=sc.gains.gamma0, Gamma=sc.gains.Gamma, sigma=sc.gains.sigma, n=n,
        T0k_offset=T0k_offset, Omega_T0k=Omega_T0k, Delta1_max=Delta1,
    )
    notes = {
        "Lambda_max": "interpretation: sup over an interval of the spectral norm of [I, (t - t_i) I]",
        "T0k": "observed first crossing of kappa per FE interval; worst case used",
        "worst_interval": fe[worst] if fe else None,
        "uncrossed_fe_intervals": int(sum(o == 0.0 for o in omegas)),
        "alpha2_lifted": exc.lifted.alpha2,
        "alpha1": exc.alpha1,
        "alpha2": exc.alpha2,
    }
    return inputs, notes


def audit_bounds(trace: Trace, settle: float = 2.0) -> dict:
    """Compare a run against the theoretical error bounds and determinant properties."""
    sc = trace.scenario
    g = sc.grid
    inputs, notes = bound_inputs_from_run(trace)
    consts = compute_constants(inputs)
    D1 = inputs.Delta1_max
    err = trace.err
    res = trace.result
    spi = _steps(g.T, sc.dt, "T")
    k_r = _steps(g.t_r_plus, sc.dt, "t_r_plus")
    theta_i = eval_truth(sc, res.t_i)[0]
    err_i = parameter_error(trace.theta_hat, theta_i)

    e0 = float(err[k_r])
    fe_rows = []
    for k in _fe_intervals(trace):
        j = k_r + (k + 1) * spi
        bound = error_bound_fe(k, e0, consts, D1)
        fe_rows.append({"k": k, "t": float(trace.t[j]), "err": float(err[j]), "bound": bound,
                        "ok": bool(err[j] <= bound)})

    post_rows = []
    k_e = trace.index(sc.t_e)
    ee = float(err[k_e])
    i = 0
    while k_e + (i + 1) * spi <= len(trace.t) - 1:
        a, b = k_e + i * spi, k_e + (i + 1) * spi
        obs = float(np.max(err[a:b + 1]))
        bound = error_bound_post(i, ee, consts, D1)
        post_rows.append({"i": i, "t": float(trace.t[b]), "err_max": obs, "bound": bound,
                          "ok": bool(obs <= bound)})
        i += 1

    k_s = trace.index(settle)
    after = err[k_s:]
    in_fe = err[k_s:k_e + 1]
    envelope = 2.0 * inputs.Theta_dot_max * g.T + consts.b
    mu = mu_max = None
    if sc.disturbance.kind == "none":
        mu = np.linalg.norm(res.Y - res.Omega[:, None] * theta_i, axis=1)
        mu_max = consts.mu_max
    audit = audit_omega(res.t, res.reset, res.interval, res.Omega, sc.gains.kappa,
                               beta=sc.beta, n=sc.n, lifted_lmax=res.lifted_lmax,
                               gram_scale=res.gram_trace, mu=mu, mu_max=mu_max)
    checks = {
        "fe_interval_ends": all(r["ok"] for r in fe_rows),
        "post_intervals": all(r["ok"] for r in post_rows),
        "asymptotic_after_settle": bool(np.max(after) < consts.asymptotic_bound) if after.size else True,
        "asymptotic_after_settle_fe_window": bool(np.max(in_fe) < consts.asymptotic_bound) if in_fe.size else True,
        "envelope_after_settle": bool(np.max(after) < envelope) if after.size else True,
        "omega_nonnegative": audit["summary"]["negative"] == 0,
        "omega_monotone": audit["summary"]["nonmonotone"] == 0,
        "omega_below_UB": audit["summary"].get("above_UB", 0) == 0,
    }
    return {
        "scenario": sc.name,
        "inputs": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                   for k, v in inputs.__dict__.items()},
        "constants": consts.to_dict(),
        "notes": notes,
        "settle": settle,
        "max_err_after_settle": float(np.max(after)) if after.size else None,
        "envelope": envelope,
        "max_err_i_fe_ends": max((float(err_i[k_r + (r["k"] + 1) * spi - 1]) for r in fe_rows),
                                 default=None),
        "fe": fe_rows,
        "post": post_rows,
        "omega_audit": audit,
        "checks": checks,
        "passed": all(checks.values()),
    }


def steady_state_error(trace: Trace, window: float = 2.0) -> float:
    """Max ``||Theta_hat - Theta||`` over the last ``window`` seconds of the excitation window."""
    sc = trace.scenario
    a = trace.index(max(sc.grid.t_r_plus, sc.t_e - window))
    b = trace.index(sc.t_e)
    return float(np.max(trace.err[a:b + 1]))


def _sweep_one(args):
    scenario, window = args
    tr = run_scenario(scenario)
    sched = tr.result
    drem = float(np.mean(sched.branch == Branch.DREM))
    k_e = tr.index(scenario.t_e)
    return {"steady_state_error": steady_state_error(tr, window),
            "drem_fraction": drem,
            "Omega_max": float(np.max(sched.Omega[:k_e + 1]))}


def _with_param(base: Scenario, param: str, value: float, index: int) -> Scenario:
    seed = int(np.random.SeedSequence([int(base.seed), int(index)]).generate_state(1)[0])
    if param == "T":
        # keep beta * T fixed, as in the preset rule beta = 0.05 / T
        beta = base.beta * base.grid.T / value
        return replace(base, grid=TimeGridConfig(value, base.grid.t_r_plus), beta=beta, seed=seed)
    if param == "gamma0":
        return replace(base, gains=replace(base.gains, gamma0=value), seed=seed)
    raise ConfigurationError(f"unknown sweep parameter {param!r}; expected T or gamma0")


def sweep(base: Scenario, param: str, values, window: float = 2.0, t_end: float | None = None,
          jobs: int = 1) -> list[dict]:
    """Rerun ``base`` for each value of ``param`` and tabulate the steady-state error.

    ``t_end`` defaults to ``t_e``: the metric only looks at the excitation window
    and the estimator is causal, so later samples cannot change it.
    """
    values = [float(v) for v in values]
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    horizon = base.t_e if t_end is None else t_end
    base = replace(base, t_end=horizon, t_e=min(base.t_e, horizon))
    scenarios = [_with_param(base, param, v, i) for i, v in enumerate(values)]
    tasks = [(s, window) for s in scenarios]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            stats = list(pool.map(_sweep_one, tasks))
    else:
        stats = [_sweep_one(t) for t in tasks]
    return [{"param": param, "value": v, "beta": s.beta, "gamma0": s.gains.gamma0,
             "T": s.grid.T, **st} for v, s, st in zip(values, scenarios, stats)]
