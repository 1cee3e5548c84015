"""scikit-learn style front end for the identification pipeline."""
from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .estimator import Branch, EstimatorGains, EstimatorState, estimator_step
from .filters import FilterState, filter_reset, filter_step
from .lift import TimeGridConfig, lift
from .linalg import mix
from .pipeline import ConfigurationError, _steps, identify
from .signals import normalize as _normalize

__all__ = ["IDREMRegressor", "check_regression_data"]


def check_regression_data(X, y=None, *, estimator=None, n_features=None):
    """Validate a sampled regression record.

    ``X`` is ``(N, n)`` (single output) or ``(N, n, m)``; ``y`` is ``(N,)`` or
    ``(N, m)``. Returns ``X`` as ``(N, n, m)`` and ``y`` as ``(N, m)``.
    """
    X = check_array(X, allow_nd=True, ensure_2d=True, dtype=np.float64, estimator=estimator)
    if X.ndim == 2:
        X = X[:, :, None]
    if X.ndim != 3:
        raise ValueError(f"X must be 2-D or 3-D, got {X.ndim}-D")
    N, n, m = X.shape
    if m > n:
        raise ValueError(f"need m <= n, got n={n}, m={m}")
    if n_features is not None and n != n_features:
        raise ValueError(f"X has {n} features, but the estimator was fitted with {n_features}")
    if y is None:
        return X
    y = check_array(y, ensure_2d=False, dtype=np.float64, estimator=estimator)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape != (N, m):
        raise ValueError(f"y must have shape ({N}, {m}) to match X, got {y.shape}")
    return X, y


class IDREMRegressor(RegressorMixin, BaseEstimator):
    """Online estimator of time-varying regression parameters.

    Each interval of width ``T`` expands the parameters to first order around
    the interval start, filters the lifted regression with forgetting rate
    ``beta`` (reset at every grid point), mixes it into a scalar regression via
    the adjugate of the filtered Gram matrix, and integrates a switching law:
    exponential convergence at rate ``gamma0`` while the determinant is at
    least ``kappa``, a leaky gradient law with gain ``Gamma`` and leakage
    ``sigma`` otherwise.

    Samples must be uniformly spaced by ``dt``, and ``dt`` must divide both
    ``T`` and ``t_r_plus``.

    Parameters
    ----------
    T : float
        Interval width of the piecewise expansion.
    beta : float or None
        Forgetting rate. ``None`` uses ``0.05 / T``.
    gamma0, sigma, kappa : float
        Switching-law gains.
    Gamma : float or array of shape (n, n)
        Gradient-branch gain; a scalar means ``Gamma * I``.
    t_r_plus : float
        Grid anchor (start of excitation).
    theta0 : array of shape (n,) or None
        Initial estimate, zeros by default.
    dt : float
        Sample spacing.
    normalize : bool
        Divide each sample by ``1 + omega^T omega`` first (single output only).

    Attributes
    ----------
    coef_ : ndarray of shape (n,)
        Latest estimate.
    theta_hat_ : ndarray of shape (N, n)
        Estimate at every sample time of the last ``fit``.
    Omega_ : ndarray of shape (N,)
    branch_ : ndarray of shape (N,)
        :class:`~idrem.estimator.Branch` value active from each sample.
    """

    def __init__(self, T=0.25, beta=None, gamma0=100.0, Gamma=0.75, sigma=1e-4, kappa=1e-9,
                 t_r_plus=0.0, theta0=None, dt=1e-4, normalize=False):
        self.T = T
        self.beta = beta
        self.gamma0 = gamma0
        self.Gamma = Gamma
        self.sigma = sigma
        self.kappa = kappa
        self.t_r_plus = t_r_plus
        self.theta0 = theta0
        self.dt = dt
        self.normalize = normalize

    def _settings(self, n):
        Gamma = np.asarray(self.Gamma, dtype=float)
        if Gamma.ndim == 0:
            Gamma = float(Gamma) * np.eye(n)
        gains = EstimatorGains(self.gamma0, Gamma, self.sigma, self.kappa)
        beta = 0.05 / self.T if self.beta is None else float(self.beta)
        if not beta > 0:
            raise ValueError("beta must be positive")
        theta0 = np.zeros(n) if self.theta0 is None else np.asarray(self.theta0, dtype=float)
        if theta0.shape != (n,):
            raise ValueError(f"theta0 must have shape ({n},)")
        return TimeGridConfig(self.T, self.t_r_plus), beta, gains, theta0

    def _prepare(self, X, y):
        if self.normalize:
            if X.shape[2] != 1:
                raise ValueError("normalize=True requires a single output")
            y, X = _normalize(y, X)
        return X, y

    def fit(self, X, y):
        X, y = check_regression_data(X, y, estimator=self)
        X, y = self._prepare(X, y)
        n = X.shape[1]
        grid, beta, gains, theta0 = self._settings(n)
        res = identify(X, y, self.dt, grid, beta, gains, theta0)
        self.result_ = res
        self.theta_hat_ = res.theta_hat
        self.Omega_ = res.Omega
        self.branch_ = res.branch
        self.coef_ = res.theta_hat[-1].copy()
        self.n_features_in_ = n
        self.n_outputs_ = X.shape[2]
        self.n_seen_ = len(X)
        # a batch pass leaves no primed filter state to stream from
        self._stream_ready = False
        return self

    def _start_stream(self, n, grid, beta, gains, theta):
        self._grid, self._beta, self._gains = grid, beta, gains
        self._spi = _steps(grid.T, self.dt, "T")
        self._k_r = _steps(grid.t_r_plus, self.dt, "t_r_plus")
        self.filter_state_ = FilterState.zeros(2 * n, T=grid.T)
        self.estimator_state_ = EstimatorState(np.asarray(theta, dtype=float).copy(), Branch.SIGMA_MOD,
                                               0.0)
        self._stream_ready = True

    def partial_fit(self, X, y):
        """Feed samples one at a time through the streaming filter, mixer and RK4 step.

        The first call starts a fresh run at ``t = 0``. Returns ``self``;
        ``theta_hat_``/``Omega_``/``branch_`` then cover the samples of this call.
        """
        first = not hasattr(self, "n_seen_")
        X, y = check_regression_data(X, y, estimator=self,
                                     n_features=None if first else self.n_features_in_)
        X, y = self._prepare(X, y)
        n = X.shape[1]
        if first:
            grid, beta, gains, theta0 = self._settings(n)
            self.n_features_in_, self.n_outputs_, self.n_seen_ = n, X.shape[2], 0
            self._start_stream(n, grid, beta, gains, theta0)
        elif not self._stream_ready:
            raise ConfigurationError("partial_fit cannot continue a batch fit; use a fresh estimator")
        theta_hist = np.empty((len(X), n))
        Omega_hist = np.empty(len(X))
        branch_hist = np.empty(len(X), dtype=np.int8)
        fs, es = self.filter_state_, self.estimator_state_
        for j in range(len(X)):
            k = self.n_seen_ + j
            if k < self._k_r:
                tau, t_i, is_reset, width = k * self.dt, 0.0, k == 0, np.inf
            else:
                off = (k - self._k_r) % self._spi
                tau = off * self.dt
                t_i = self._grid.t_r_plus + ((k - self._k_r) // self._spi) * self._grid.T
                is_reset, width = off == 0, self._grid.T
            omega_bar = lift(X[j], tau, 0.0)
            if is_reset:
                fs = replace(filter_reset(fs, t_i, omega_bar, y[j], self._beta), T=width)
            else:
                fs = filter_step(fs, omega_bar, y[j], self._beta, self.dt)
            mixed = mix(fs, n)
            theta_hist[j] = es.theta_hat
            Omega_hist[j] = mixed.Omega
            es = estimator_step(es, mixed, X[j], y[j], self._gains, self.dt)
            branch_hist[j] = es.branch
        self.filter_state_, self.estimator_state_ = fs, es
        self.n_seen_ += len(X)
        self.theta_hat_, self.Omega_, self.branch_ = theta_hist, Omega_hist, branch_hist
        self.coef_ = es.theta_hat.copy()
        return self

    def predict(self, X):
        """Model output ``coef_^T omega`` for each regressor sample."""
        check_is_fitted(self, "coef_")
        X = check_regression_data(X, estimator=self, n_features=self.n_features_in_)
        out = np.einsum("i,kim->km", self.coef_, X)
        return out[:, 0] if out.shape[1] == 1 else out
