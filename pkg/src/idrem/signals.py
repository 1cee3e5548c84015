"""Ground-truth regression ``y = Theta(t)^T omega(t) + d(t)``.

Signals are built from a small closed set of primitives (constant, sine, sum,
piecewise-by-time, tabulated). Every primitive evaluates vectorized over an
array of times and, where it makes sense, exposes analytic derivatives so
the true parameter trajectory can report ``Theta``, ``dTheta`` and
``ddTheta`` exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .estimator import EstimatorGains
from .lift import TimeGridConfig

__all__ = [
    "Signal",
    "Constant",
    "Sine",
    "Sum",
    "Piecewise",
    "Tabulated",
    "Disturbance",
    "Scenario",
    "Sample",
    "Suprema",
    "signal_from_dict",
    "eval_regressor",
    "eval_truth",
    "eval_disturbance",
    "disturbance_samples",
    "make_sample",
    "normalize",
    "suprema",
]


class Signal:
    """Scalar function of time with optional analytic derivatives."""

    def __call__(self, t):
        return self.derivative(0)(t)

    def derivative(self, order: int) -> "Signal":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Signal):
    value: float

    def __call__(self, t):
        return np.full(np.shape(t), float(self.value)) if np.ndim(t) else float(self.value)

    def derivative(self, order):
        return self if order == 0 else Constant(0.0)

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Sine(Signal):
    """``amplitude * sin(frequency * t + phase)``, frequency in rad/s."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.sin(self.frequency * np.asarray(t, dtype=float) + self.phase)

    def derivative(self, order):
        # d/dt sin(w t + p) = w sin(w t + p + pi/2)
        return Sine(
            self.amplitude * self.frequency ** order,
            self.frequency,
            self.phase + order * math.pi / 2,
        )

    def to_dict(self):
        return {"kind": "sine", "amplitude": self.amplitude,
                "frequency": self.frequency, "phase": self.phase}


@dataclass(frozen=True)
class Sum(Signal):
    terms: tuple

    def __call__(self, t):
        out = 0.0
        for term in self.terms:
            out = out + term(t)
        return out

    def derivative(self, order):
        return Sum(tuple(term.derivative(order) for term in self.terms))

    def to_dict(self):
        return {"kind": "sum", "terms": [term.to_dict() for term in self.terms]}


@dataclass(frozen=True)
class Piecewise(Signal):
    """``pieces[j]`` is active on ``[breaks[j-1], breaks[j])``.

    Derivatives are taken piece by piece; jumps at the breaks are not
    represented (their distributional part is ignored).
    """

    breaks: tuple
    pieces: tuple

    def __post_init__(self):
        if len(self.pieces) != len(self.breaks) + 1:
            raise ValueError("piecewise signal needs len(pieces) == len(breaks) + 1")
        if list(self.breaks) != sorted(self.breaks):
            raise ValueError("piecewise breaks must be increasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        which = np.searchsorted(np.asarray(self.breaks, dtype=float), t, side="right")
        out = np.zeros(t.shape)
        for j, piece in enumerate(self.pieces):
            mask = which == j
            if np.any(mask):
                out[mask] = np.broadcast_to(piece(t[mask]), t[mask].shape)
        return out if out.ndim else float(out)

    def derivative(self, order):
        return Piecewise(self.breaks, tuple(p.derivative(order) for p in self.pieces))

    def to_dict(self):
        return {"kind": "piecewise", "breaks": list(self.breaks),
                "pieces": [p.to_dict() for p in self.pieces]}


@dataclass(frozen=True)
class Tabulated(Signal):
    """Zero-order hold over ``(times, values)``; constant beyond the ends."""

    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("tabulated signal needs equal, nonempty times and values")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(np.asarray(self.times, dtype=float), t, side="right") - 1
        out = np.asarray(self.values, dtype=float)[np.clip(idx, 0, len(self.values) - 1)]
        return out if out.ndim else float(out)

    def derivative(self, order):
        if order == 0:
            return self
        raise ValueError("tabulated signals have no analytic derivatives")

    def to_dict(self):
        return {"kind": "tabulated", "times": list(self.times), "values": list(self.values)}


def signal_from_dict(spec) -> Signal:
    """Build a signal from a plain mapping (as read from a config file).

    A bare number is shorthand for a constant. Sines accept ``frequency``
    (rad/s) or ``hz``.
    """
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    if isinstance(spec, Signal):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError(f"signal spec must be a number or a table with 'kind', got {spec!r}")
    kind = spec["kind"]
    allowed = {
        "constant": {"value"},
        "sine": {"amplitude", "frequency", "hz", "phase"},
        "sum": {"terms"},
        "piecewise": {"breaks", "pieces"},
        "tabulated": {"times", "values"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown signal kind {kind!r}")
    extra = set(spec) - allowed[kind] - {"kind"}
    if extra:
        raise ValueError(f"unknown key(s) {sorted(extra)} for signal kind {kind!r}")
    if kind == "constant":
        return Constant(float(spec["value"]))
    if kind == "sine":
        if "frequency" in spec and "hz" in spec:
            raise ValueError("give either 'frequency' or 'hz' for a sine, not both")
        freq = float(spec["frequency"]) if "frequency" in spec else 2 * math.pi * float(spec.get("hz", 1.0 / (2 * math.pi)))
        return Sine(float(spec.get("amplitude", 1.0)), freq, float(spec.get("phase", 0.0)))
    if kind == "sum":
        return Sum(tuple(signal_from_dict(s) for s in spec["terms"]))
    if kind == "piecewise":
        return Piecewise(tuple(float(b) for b in spec["breaks"]),
                         tuple(signal_from_dict(p) for p in spec["pieces"]))
    return Tabulated(tuple(float(x) for x in spec["times"]), tuple(float(v) for v in spec["values"]))


@dataclass(frozen=True)
class Disturbance:
    """Bounded additive disturbance: ``none``, ``uniform(lo, hi)`` or ``tabulated``."""

    kind: str = "none"
    lo: float = 0.0
    hi: float = 0.0
    table: Signal | None = None

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "tabulated"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.kind == "uniform" and not self.lo <= self.hi:
            raise ValueError("uniform disturbance needs lo <= hi")
        if self.kind == "tabulated" and self.table is None:
            raise ValueError("tabulated disturbance needs a table")

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", float(lo), float(hi))

    @property
    def bound(self) -> float:
        """Sup of ``|d|`` for one output channel."""
        if self.kind == "none":
            return 0.0
        if self.kind == "uniform":
            return max(abs(self.lo), abs(self.hi))
        return float(np.max(np.abs(np.asarray(self.table.values, dtype=float))))

    def to_dict(self):
        if self.kind == "uniform":
            return {"kind": "uniform", "lo": self.lo, "hi": self.hi}
        if self.kind == "tabulated":
            return {"kind": "tabulated", "table": self.table.to_dict()}
        return {"kind": "none"}


def _as_signal_matrix(spec, n, m):
    rows = list(spec)
    if len(rows) != n:
        raise ValueError(f"regressor needs {n} rows, got {len(rows)}")
    out = []
    for row in rows:
        if isinstance(row, (list, tuple)):
            cols = [signal_from_dict(s) for s in row]
        else:
            cols = [signal_from_dict(row)]
        if len(cols) != m:
            raise ValueError(f"regressor row needs {m} columns, got {len(cols)}")
        out.append(tuple(cols))
    return tuple(out)


@dataclass
class Scenario:
    """Complete description of one identification experiment.

    ``regressor`` is an ``n x m`` nested tuple of signals and ``theta`` a
    length-``n`` tuple; both accept plain mappings and are converted on
    construction.
    """

    n: int
    m: int
    regressor: Sequence
    theta: Sequence
    disturbance: Disturbance = field(default_factory=Disturbance)
    t_end: float = 20.0
    dt: float = 1e-4
    seed: int = 0
    grid: TimeGridConfig = field(default_factory=lambda: TimeGridConfig(0.25))
    gains: EstimatorGains = field(default_factory=EstimatorGains)
    beta: float = 0.2
    theta0: Sequence | None = None
    normalize: bool = False
    name: str = "custom"
    t_e: float | None = None  # end of the excitation window; defaults to t_end
    Ts: float = 0.1  # sliding-window width for excitation checks

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.m > self.n:
            raise ValueError(f"need 1 <= m <= n, got n={self.n}, m={self.m}")
        if not self.dt > 0 or not self.t_end > 0 or not self.beta > 0:
            raise ValueError("dt, t_end and beta must be positive")
        if self.normalize and self.m != 1:
            raise ValueError("normalization is only defined for m = 1")
        self.regressor = _as_signal_matrix(self.regressor, self.n, self.m)
        theta = tuple(signal_from_dict(s) for s in self.theta)
        if len(theta) != self.n:
            raise ValueError(f"theta needs {self.n} entries, got {len(theta)}")
        self.theta = theta
        theta0 = np.zeros(self.n) if self.theta0 is None else np.asarray(self.theta0, dtype=float)
        if theta0.shape != (self.n,):
            raise ValueError(f"theta0 must have shape ({self.n},)")
        self.theta0 = theta0
        if self.gains.Gamma.shape != (self.n, self.n):
            raise ValueError(f"Gamma must be {self.n}x{self.n}")
        if self.t_e is None:
            self.t_e = self.t_end
        if not self.grid.t_r_plus < self.t_e <= self.t_end:
            raise ValueError("need t_r_plus < t_e <= t_end")

    @property
    def disturbance_spec(self) -> Disturbance:
        return self.disturbance

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class Sample:
    t: float
    omega: np.ndarray
    y: np.ndarray
    theta_true: np.ndarray
    theta_dot_true: np.ndarray


def _check_horizon(scenario, t):
    t = np.asarray(t, dtype=float)
    tol = 1e-9 * max(1.0, scenario.t_end)
    if np.any(t < -tol) or np.any(t > scenario.t_end + tol):
        raise ValueError(f"time outside horizon [0, {scenario.t_end}]")
    return t


def eval_regressor(scenario: Scenario, t):
    """``omega(t)`` with shape ``(n, m)``, or ``(N, n, m)`` for an array of times."""
    t = _check_horizon(scenario, t)
    vals = [[np.broadcast_to(s(t), t.shape) for s in row] for row in scenario.regressor]
    out = np.asarray(vals, dtype=float)  # (n, m, ...)
    return np.moveaxis(out, (0, 1), (-2, -1)) if t.ndim else out


def eval_truth(scenario: Scenario, t):
    """``(Theta, dTheta, ddTheta)`` at ``t``, each ``(n,)`` or ``(N, n)``."""
    t = _check_horizon(scenario, t)

    def ev(order):
        out = np.asarray([np.broadcast_to(s.derivative(order)(t), t.shape) for s in scenario.theta],
                         dtype=float)
        return np.moveaxis(out, 0, -1) if t.ndim else out

    return ev(0), ev(1), ev(2)


def disturbance_samples(scenario: Scenario) -> np.ndarray:
    """Disturbance at every integration step, shape ``(N + 1, m)``.

    Uniform draws come from ``numpy.random.default_rng(seed)``, one per step,
    so the sequence is a pure function of the scenario.
    """
    dist = scenario.disturbance
    N = scenario.n_steps
    if dist.kind == "none":
        return np.zeros((N + 1, scenario.m))
    if dist.kind == "uniform":
        rng = np.random.default_rng(scenario.seed)
        return rng.uniform(dist.lo, dist.hi, size=(N + 1, scenario.m))
    vals = np.asarray(dist.table(scenario.times()), dtype=float)
    return np.repeat(vals[:, None], scenario.m, axis=1)


def _step_index(scenario, t):
    return np.floor(np.asarray(t, dtype=float) / scenario.dt + 1e-9).astype(int)


def eval_disturbance(scenario: Scenario, t):
    """``d(t)``, shape ``(m,)``: the value drawn for the step containing ``t``."""
    t = _check_horizon(scenario, t)
    return disturbance_samples(scenario)[np.minimum(_step_index(scenario, t), scenario.n_steps)]


def make_sample(scenario: Scenario, t: float, d=None) -> Sample:
    omega = eval_regressor(scenario, t)
    theta, theta_dot, _ = eval_truth(scenario, t)
    if d is None:
        d = eval_disturbance(scenario, t)
    y = theta @ omega + d
    return Sample(float(t), omega, y, theta, theta_dot)


def normalize(y, omega):
    """Scale a single-output regression by ``n_s = 1 / (1 + omega^T omega)``.

    ``omega`` is ``(n,)`` or ``(..., n, 1)``; ``y`` is a scalar or has a
    trailing axis of length one. The normalized regressor has norm below one.
    """
    omega = np.asarray(omega, dtype=float)
    y = np.asarray(y, dtype=float)
    col = omega[:, None] if omega.ndim == 1 else omega
    if col.shape[-1] != 1:
        raise ValueError("normalization is only supported for m = 1")
    ns = 1.0 / (1.0 + np.sum(col * col, axis=(-2, -1)))
    ns_y = ns[..., None] if y.ndim > ns.ndim else ns
    return ns_y * y, ns.reshape(ns.shape + (1,) * (omega.ndim - ns.ndim)) * omega


@dataclass(frozen=True)
class Suprema:
    omega_max: float
    Theta_max: float
    Theta_dot_max: float
    Theta_ddot_max: float
    d_max: float


def _spectral_norms(omega):
    if omega.shape[-1] == 1:
        return np.linalg.norm(omega[..., 0], axis=-1)
    return np.linalg.norm(omega, ord=2, axis=(-2, -1))


def suprema(scenario: Scenario, t0: float = 0.0, t1: float | None = None,
            step: float | None = None) -> Suprema:
    """Numerical suprema over ``[t0, t1]`` by dense sampling (default step ``dt/10``)."""
    t1 = scenario.t_end if t1 is None else t1
    step = scenario.dt / 10 if step is None else step
    t = np.linspace(t0, t1, int(round((t1 - t0) / step)) + 1)
    chunks = np.array_split(t, max(1, len(t) // 200_000))
    w_max = th_max = thd_max = thdd_max = 0.0
    for tc in chunks:
        omega = eval_regressor(scenario, tc)
        if scenario.normalize:
            _, omega = normalize(np.zeros((len(tc), 1)), omega)
        th, thd, thdd = eval_truth(scenario, tc)
        w_max = max(w_max, float(np.max(_spectral_norms(omega))))
        th_max = max(th_max, float(np.max(np.linalg.norm(th, axis=-1))))
        thd_max = max(thd_max, float(np.max(np.linalg.norm(thd, axis=-1))))
        thdd_max = max(thdd_max, float(np.max(np.linalg.norm(thdd, axis=-1))))
    d_max = scenario.disturbance.bound * math.sqrt(scenario.m)
    return Suprema(w_max, th_max, thd_max, thdd_max, d_max)
