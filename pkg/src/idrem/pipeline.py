"""Full identification pass over a uniformly sampled record.

The filter and mixing stages do not depend on the estimate, so they are
evaluated for all samples at once; only the estimator recurrence is sequential.
Grid bookkeeping is done in integer sample counts, which requires the sample
spacing to divide both the interval width and the excitation start.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import EstimatorGains, integrate_estimates
from .filters import filter_trace
from .lift import TimeGridConfig, lift
from .linalg import NumericalInconsistencyError, mix_batch

__all__ = ["ConfigurationError", "GridLayout", "IdentificationResult", "grid_layout", "identify"]


class ConfigurationError(ValueError):
    pass


def _steps(length: float, dt: float, what: str) -> int:
    k = round(length / dt)
    if abs(length / dt - k) > 1e-9 * max(1.0, abs(k)):
        raise ConfigurationError(f"dt={dt:g} must divide {what}={length:g}")
    return int(k)


@dataclass(frozen=True)
class GridLayout:
    interval: np.ndarray  # (N,) interval index
    t_i: np.ndarray  # (N,) interval start
    tau: np.ndarray  # (N,) time since interval start
    reset: np.ndarray  # (N,) True on grid points
    steps_per_interval: int


def grid_layout(n_samples: int, dt: float, grid: TimeGridConfig) -> GridLayout:
    spi = _steps(grid.T, dt, "T")
    if spi < 1:
        raise ConfigurationError(f"dt={dt:g} exceeds the interval width T={grid.T:g}")
    k_r = _steps(grid.t_r_plus, dt, "t_r_plus")
    k = np.arange(n_samples)
    after = k >= k_r
    rel = np.where(after, k - k_r, 0)
    interval = np.where(after, rel // spi, 0)
    offset = np.where(after, rel % spi, k)
    t_i = np.where(after, grid.t_r_plus + interval * grid.T, 0.0)
    tau = offset * dt
    reset = (after & (offset == 0)) | (k == 0)
    return GridLayout(interval, t_i, tau, reset, spi)


@dataclass
class IdentificationResult:
    t: np.ndarray
    interval: np.ndarray
    t_i: np.ndarray
    reset: np.ndarray
    Omega: np.ndarray
    Y: np.ndarray
    theta_hat: np.ndarray
    branch: np.ndarray
    lifted_lmax: np.ndarray  # lambda_max(omega_bar omega_bar^T) per sample
    gram_trace: np.ndarray  # trace of the filtered Gram, an upper bound on its norm

    def __len__(self):
        return len(self.t)


def identify(omega, y, dt: float, grid: TimeGridConfig, beta: float, gains: EstimatorGains,
             theta0=None, t0: float = 0.0) -> IdentificationResult:
    """Identify time-varying parameters from ``omega`` ``(N, n, m)`` and ``y`` ``(N, m)``.

    Samples are taken at ``t0 + k dt``; the grid is anchored at ``grid.t_r_plus``
    measured from ``t0``.
    """
    omega = np.asarray(omega, dtype=float)
    y = np.asarray(y, dtype=float)
    N, n, m = omega.shape
    if y.shape != (N, m):
        raise ValueError(f"y must have shape {(N, m)}, got {y.shape}")
    if gains.Gamma.shape != (n, n):
        raise ValueError(f"Gamma must be {n}x{n}")
    layout = grid_layout(N, dt, grid)
    t = t0 + np.arange(N) * dt
    omega_bar = lift(omega, layout.tau, np.zeros(N))
    omega_f, y_f = filter_trace(omega_bar, y, layout.tau, layout.reset, beta, dt)
    try:
        Omega, _, Y = mix_batch(omega_f, y_f, n)
    except NumericalInconsistencyError as exc:
        when = t[exc.index[0]] if exc.index else float("nan")
        raise NumericalInconsistencyError(f"{exc} (t={when:.6g})", exc.index) from None
    theta0 = np.zeros(n) if theta0 is None else np.asarray(theta0, dtype=float)
    theta_hat, branch = integrate_estimates(theta0, Omega, Y, omega, y, gains, dt, t=t)
    if m == 1:
        lmax = np.sum(omega_bar[..., 0] ** 2, axis=-1)
    else:
        lmax = np.linalg.eigvalsh(np.einsum("kim,kin->kmn", omega_bar, omega_bar))[:, -1]
    return IdentificationResult(t, layout.interval, t0 + layout.t_i, layout.reset, Omega, Y,
                                theta_hat, branch, lmax,
                                np.trace(omega_f, axis1=1, axis2=2))
