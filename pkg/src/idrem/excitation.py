"""Finite-excitation checks on sampled regressor traces.

A regressor is finitely and continuously exciting over ``[t_r_plus, t_e]``
when the Gram integral over the whole window is at least ``alpha1 I`` and
every sliding window of width ``Ts`` inside it gives at least ``alpha2 I``.
Gram integrals use the trapezoidal rule at the trace resolution; sliding
windows come from prefix sums, so each window costs O(1) after one pass.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .lift import TimeGridConfig, lift
from .linalg import jacobi_eigenvalues
from .pipeline import grid_layout

__all__ = ["ExcitationReport", "gram", "gram_prefix", "check_fe", "lifted_trace"]

# excitation levels below this fraction of the largest Gram eigenvalue count as zero
RTOL = 1e-9


def _as_trace(omega):
    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 2:
        omega = omega[:, :, None]
    if omega.ndim != 3:
        raise ValueError(f"regressor trace must be (N, n) or (N, n, m), got shape {omega.shape}")
    return omega


def gram_prefix(omega, dt: float):
    """Cumulative trapezoidal Gram ``P[k] = int_{t_0}^{t_k} omega omega^T``, shape ``(N, n, n)``."""
    omega = _as_trace(omega)
    outer = np.einsum("kim,kjm->kij", omega, omega)
    P = np.zeros_like(outer)
    P[1:] = np.cumsum(0.5 * dt * (outer[1:] + outer[:-1]), axis=0)
    return P


def _index(t, t0, dt, N):
    k = int(round((t - t0) / dt))
    if k < 0 or k > N - 1 or abs((t - t0) / dt - k) > 1e-6:
        raise ValueError(f"time {t} is not a sample of the trace [{t0}, {t0 + (N - 1) * dt}]")
    return k


def gram(omega, dt: float, t_a: float, t_b: float, t0: float = 0.0):
    """Trapezoidal ``int_{t_a}^{t_b} omega omega^T dtau`` over a trace sampled at ``t0 + k dt``."""
    omega = _as_trace(omega)
    if not t_a < t_b:
        raise ValueError("need t_a < t_b")
    a = _index(t_a, t0, dt, len(omega))
    b = _index(t_b, t0, dt, len(omega))
    outer = np.einsum("kim,kjm->kij", omega[a:b + 1], omega[a:b + 1])
    return 0.5 * dt * (outer[:-1] + outer[1:]).sum(axis=0)


@dataclass
class ExcitationReport:
    t_r_plus: float
    t_e: float
    alpha1: float
    Ts: float
    alpha2: float
    satisfied: bool
    alpha2_at: float  # start of the least exciting window
    lifted: "ExcitationReport | None" = None

    def to_dict(self):
        d = asdict(self)
        d["lifted"] = self.lifted.to_dict() if self.lifted is not None else None
        return d


def lifted_trace(omega, dt: float, grid: TimeGridConfig):
    """Lift a sampled trace (first sample at ``t = 0``) with the interval layout of ``grid``."""
    omega = _as_trace(omega)
    layout = grid_layout(len(omega), dt, grid)
    return lift(omega, layout.tau, np.zeros(len(omega)))


def check_fe(omega, dt: float, t_r_plus: float, t_e: float, Ts: float, t0: float = 0.0,
             grid: TimeGridConfig | None = None) -> ExcitationReport:
    """Measure ``alpha1`` and ``alpha2`` on ``[t_r_plus, t_e]``.

    Window starts run over every sample in ``[t_r_plus, t_e - Ts]``. When
    ``grid`` is given the same measurement is repeated on the lifted regressor
    and attached as ``lifted``.
    """
    omega = _as_trace(omega)
    if not t_e - t_r_plus >= Ts > 0:
        raise ValueError("need 0 < Ts <= t_e - t_r_plus")
    N = len(omega)
    a = _index(t_r_plus, t0, dt, N)
    b = _index(t_e, t0, dt, N)
    w = int(round(Ts / dt))
    P = gram_prefix(omega[a:b + 1], dt)
    full = P[-1]
    windows = P[w:] - P[:-w] if w > 0 else P
    eig_full = jacobi_eigenvalues(full)
    eig_win = jacobi_eigenvalues(windows)
    alpha1 = float(eig_full[0])
    lmin = eig_win[:, 0]
    j = int(np.argmin(lmin))
    alpha2 = float(lmin[j])
    satisfied = bool(alpha1 > RTOL * max(eig_full[-1], 0.0) and alpha1 > 0
                     and alpha2 > RTOL * max(float(np.max(eig_win[:, -1])), 0.0) and alpha2 > 0)
    report = ExcitationReport(t_r_plus, t_e, alpha1, Ts, alpha2, satisfied, t_r_plus + j * dt)
    if grid is not None:
        if t0 != 0.0:
            raise ValueError("lifted check needs a trace starting at t = 0")
        lifted = lifted_trace(omega, dt, grid)
        report.lifted = check_fe(lifted, dt, t_r_plus, t_e, Ts, t0)
    return report
