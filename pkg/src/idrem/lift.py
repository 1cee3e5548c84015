"""Regular time grid and first-order Taylor lifting of the regressor.

On ``[t_i, t_i + T)`` the parameters are written as
``Theta(t) ~ Theta_i + (t - t_i) dTheta_i``, so the regression becomes
``y = theta_i^T omega_bar`` with the constant vector
``theta_i = [Theta_i; dTheta_i]`` (values first, rates second) and the lifted
regressor ``omega_bar = [omega; (t - t_i) omega]``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = ["TimeGridConfig", "LiftedSample", "interval_index", "lambda_matrix", "lift"]


@dataclass(frozen=True)
class TimeGridConfig:
    """Interval width ``T`` and the excitation start ``t_r_plus`` anchoring the grid."""

    T: float
    t_r_plus: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"interval width T must be positive, got {self.T}")
        if self.t_r_plus < 0:
            raise ValueError("t_r_plus must be nonnegative")

    def check_against(self, Ts: float, t_e: float) -> bool:
        """Warn unless ``Ts < T << t_e - t_r_plus``; returns whether the check passed."""
        ok = Ts < self.T and self.T <= 0.1 * (t_e - self.t_r_plus)
        if not ok:
            warnings.warn(
                f"grid width T={self.T} is not within (Ts={Ts}, (t_e - t_r+)/10]", stacklevel=2
            )
        return ok


@dataclass(frozen=True)
class LiftedSample:
    t: float
    i: int
    t_i: float
    omega_bar: np.ndarray
    y: np.ndarray


def interval_index(t: float, grid: TimeGridConfig):
    """Return ``(i, t_i)`` with ``t_i = t_r_plus + i T <= t < t_i + T``.

    Intervals are half-open, so a grid point starts a new interval. Before
    ``t_r_plus`` the pre-excitation stretch is reported as ``(0, 0.0)``.
    """
    if t < grid.t_r_plus:
        return 0, 0.0
    x = (t - grid.t_r_plus) / grid.T
    i = math.floor(x)
    # absorb rounding just below a grid point (e.g. 0.3 / 0.1 = 2.9999999999999996)
    if math.isclose(x, i + 1, rel_tol=0.0, abs_tol=1e-9):
        i += 1
    return i, grid.t_r_plus + i * grid.T


def lambda_matrix(t: float, t_i: float, n: int) -> np.ndarray:
    """``Lambda(t, t_i)`` of shape ``(n, 2n)`` with ``Lambda theta_i = Theta_i + (t - t_i) dTheta_i``.

    Columns are ordered values-then-rates, i.e. ``[I, (t - t_i) I]``.
    """
    tau = t - t_i
    if tau < 0:
        raise ValueError(f"t={t} precedes interval start t_i={t_i}")
    eye = np.eye(n)
    return np.hstack([eye, tau * eye])


def lift(omega, t, t_i):
    """Lifted regressor ``Lambda^T omega = [omega; (t - t_i) omega]``.

    ``omega`` is ``(n, m)`` (or ``(n,)``); stacks ``(N, n, m)`` with array
    ``t``/``t_i`` are lifted row by row.
    """
    omega = np.asarray(omega, dtype=float)
    tau = np.asarray(t, dtype=float) - np.asarray(t_i, dtype=float)
    if np.any(tau < -1e-12):
        raise ValueError("t precedes the interval start")
    if tau.ndim == 0:
        return np.concatenate([omega, tau * omega], axis=0)
    if omega.ndim != 3:
        raise ValueError("stacked lift expects omega of shape (N, n, m)")
    return np.concatenate([omega, tau[:, None, None] * omega], axis=1)
