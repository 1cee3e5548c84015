"""Interval-reset integral filters with exponential forgetting.

Within an interval starting at ``t_i`` the filters accumulate

    omega_f(t) = int_{t_i}^t w(s) omega_bar(s) omega_bar(s)^T ds
    y_f(t)     = int_{t_i}^t w(s) omega_bar(s) y(s)^T ds

with ``w(s) = exp(-beta (s - t_i))`` and are zeroed at every grid point.
Integration is the trapezoidal rule at the sample spacing.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "FilterState",
    "GridCrossingError",
    "filter_reset",
    "filter_step",
    "filter_trace",
    "integrand",
]


class GridCrossingError(ValueError):
    """A filter step would run past the end of the current interval."""


def integrand(omega_bar, y, tau, beta):
    """Weighted Gram and output integrands at elapsed time ``tau`` (stack-aware)."""
    omega_bar = np.asarray(omega_bar, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.exp(-beta * np.asarray(tau, dtype=float))
    G = np.einsum("...im,...jm->...ij", omega_bar, omega_bar)
    g = np.einsum("...im,...m->...i", omega_bar, y)
    return w[..., None, None] * G, w[..., None] * g


@dataclass(frozen=True)
class FilterState:
    omega_f: np.ndarray
    y_f: np.ndarray
    t_i: float = 0.0
    elapsed: float = 0.0
    T: float = np.inf
    # weighted integrands at the current time, needed by the next trapezoid
    G_last: np.ndarray | None = None
    g_last: np.ndarray | None = None

    @classmethod
    def zeros(cls, size: int, t_i: float = 0.0, T: float = np.inf):
        return cls(np.zeros((size, size)), np.zeros(size), t_i, 0.0, T)

    @property
    def size(self) -> int:
        return self.omega_f.shape[0]


def filter_reset(state: FilterState, t_i: float, omega_bar=None, y=None, beta: float = 0.0):
    """Zero the filters at grid point ``t_i``.

    Passing the lifted sample at ``t_i`` primes the trapezoid for the next step.
    """
    k = state.size
    G = g = None
    if omega_bar is not None:
        G, g = integrand(omega_bar, y, 0.0, beta)
    return FilterState(np.zeros((k, k)), np.zeros(k), t_i, 0.0, state.T, G, g)


def filter_step(state: FilterState, omega_bar, y, beta: float, dt: float) -> FilterState:
    """Advance the filters by ``dt``; ``omega_bar`` and ``y`` are taken at the step's end."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if state.G_last is None:
        raise ValueError("filter has no sample at the start of the step; pass one to filter_reset")
    elapsed = state.elapsed + dt
    if elapsed > state.T * (1 + 1e-9):
        raise GridCrossingError(
            f"step to t_i + {elapsed:.6g} crosses the interval end t_i + {state.T:.6g}"
        )
    G, g = integrand(omega_bar, y, elapsed, beta)
    omega_f = state.omega_f + 0.5 * dt * (state.G_last + G)
    omega_f = 0.5 * (omega_f + omega_f.T)
    y_f = state.y_f + 0.5 * dt * (state.g_last + g)
    return replace(state, omega_f=omega_f, y_f=y_f, elapsed=elapsed, G_last=G, g_last=g)


def filter_trace(omega_bar, y, tau, reset, beta: float, dt: float):
    """Filter states at every sample of a uniformly sampled record.

    Parameters
    ----------
    omega_bar : (N, 2n, m) lifted regressor, each row lifted with its own interval start
    y : (N, m)
    tau : (N,) elapsed time since the row's interval start
    reset : (N,) bool, True where a new interval starts (row 0 must be one)
    beta, dt : forgetting rate and sample spacing

    Returns
    -------
    omega_f : (N, 2n, 2n), y_f : (N, 2n)
    """
    reset = np.asarray(reset, dtype=bool)
    if not reset[0]:
        raise ValueError("the first sample must start an interval")
    G, g = integrand(omega_bar, y, tau, beta)
    omega_f = np.zeros_like(G)
    y_f = np.zeros_like(g)
    starts = np.flatnonzero(reset)
    ends = np.append(starts[1:], len(reset))
    for a, b in zip(starts, ends):
        if b - a < 2:
            continue
        incG = 0.5 * dt * (G[a:b - 1] + G[a + 1:b])
        incg = 0.5 * dt * (g[a:b - 1] + g[a + 1:b])
        omega_f[a + 1:b] = np.cumsum(incG, axis=0)
        y_f[a + 1:b] = np.cumsum(incg, axis=0)
    return omega_f, y_f
