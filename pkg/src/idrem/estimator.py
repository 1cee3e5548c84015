"""Two-branch switching estimation law.

While the mixed scalar regressor is large enough (``Omega >= kappa``) the
estimate is pulled towards ``Y / Omega`` at rate ``gamma0``; otherwise a
gradient law with sigma-modification leakage keeps it bounded.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Branch",
    "EstimatorGains",
    "EstimatorState",
    "rhs",
    "estimator_step",
    "integrate_estimates",
    "parameter_error",
]


class Branch(enum.IntEnum):
    SIGMA_MOD = 0
    DREM = 1


@dataclass(frozen=True)
class EstimatorGains:
    gamma0: float = 100.0
    Gamma: np.ndarray = field(default_factory=lambda: 0.75 * np.eye(2))
    sigma: float = 1e-4
    kappa: float = 1e-9

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        object.__setattr__(self, "Gamma", G)
        if not (self.gamma0 > 0 and self.sigma > 0 and self.kappa > 0):
            raise ValueError("gamma0, sigma and kappa must be positive")
        if G.shape[0] != G.shape[1] or not np.allclose(G, G.T):
            raise ValueError("Gamma must be a symmetric square matrix")
        if np.linalg.eigvalsh(G)[0] <= 0:
            raise ValueError("Gamma must be positive definite")

    @classmethod
    def scaled_identity(cls, n, gamma=0.75, **kw):
        return cls(Gamma=gamma * np.eye(n), **kw)


@dataclass(frozen=True)
class EstimatorState:
    theta_hat: np.ndarray
    branch: Branch = Branch.SIGMA_MOD
    t: float = 0.0


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError("non-finite value in estimator input")


def rhs(theta_hat, Omega, Y, omega, y, gains: EstimatorGains):
    """Right-hand side of the switching law; returns ``(dtheta, branch)``."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 1:
        omega = omega[:, None]
    y = np.atleast_1d(np.asarray(y, dtype=float))
    _check_finite(theta_hat, Omega, Y, omega, y)
    if Omega >= gains.kappa:
        # -(gamma0 / Omega^2) Omega (Omega theta - Y), written without the square
        return -gains.gamma0 * (theta_hat - np.asarray(Y, dtype=float) / Omega), Branch.DREM
    e = theta_hat @ omega - y
    G = gains.Gamma
    return -G @ (omega @ e) - gains.sigma * (G @ theta_hat), Branch.SIGMA_MOD


def estimator_step(state: EstimatorState, mixed, omega, y, gains: EstimatorGains,
                   dt: float) -> EstimatorState:
    """One classical RK4 step with ``(Omega, Y, omega, y)`` held over the step.

    ``mixed`` is a :class:`~idrem.linalg.MixedRegression` (anything with
    ``Omega`` and ``Y``). The returned branch is the one active at the step's start.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")

    def f(x):
        return rhs(x, mixed.Omega, mixed.Y, omega, y, gains)[0]

    x = state.theta_hat
    k1, branch = rhs(x, mixed.Omega, mixed.Y, omega, y, gains)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    x_new = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return EstimatorState(x_new, branch, state.t + dt)


def _affine_coefficients(Omega, Y, omega, y, gains):
    """Per-step ``dtheta = -A theta + b`` for a stack of held inputs."""
    N, n, _ = omega.shape
    drem = Omega >= gains.kappa
    G = gains.Gamma
    A = np.empty((N, n, n))
    b = np.empty((N, n))
    A[drem] = gains.gamma0 * np.eye(n)
    safe = np.where(drem, Omega, 1.0)
    b[drem] = gains.gamma0 * Y[drem] / safe[drem, None]
    s = ~drem
    WWt = np.einsum("kim,kjm->kij", omega[s], omega[s])
    A[s] = G @ (WWt + gains.sigma * np.eye(n))
    b[s] = np.einsum("ij,kj->ki", G, np.einsum("kim,km->ki", omega[s], y[s]))
    return A, b, drem


def integrate_estimates(theta0, Omega, Y, omega, y, gains: EstimatorGains, dt: float,
                        t=None):
    """Run the law over a sampled record with zero-order-held inputs.

    For held inputs each branch is affine in the estimate, so one RK4 step is
    the linear map ``theta -> R theta + S b`` with
    ``R = sum_{j<=4} Z^j / j!`` and ``S = dt * sum_{j<=3} Z^j / (j+1)!``,
    ``Z = -dt A``. These maps are built for all steps at once; only the
    recurrence itself is sequential.

    Returns ``theta_hat`` of shape ``(N, n)`` (estimate at each sample time,
    the last one obtained after ``N - 1`` steps) and the branch per sample.
    """
    omega = np.asarray(omega, dtype=float)
    y = np.asarray(y, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _check_finite(omega, y, Omega, Y)
    N, n, _ = omega.shape
    A, b, drem = _affine_coefficients(Omega, Y, omega, y, gains)
    Z = -dt * A
    eye = np.eye(n)
    Z2 = Z @ Z
    Z3 = Z2 @ Z
    Z4 = Z3 @ Z
    R = eye + Z + Z2 / 2 + Z3 / 6 + Z4 / 24
    c = dt * np.einsum("kij,kj->ki", eye + Z / 2 + Z2 / 6 + Z3 / 24, b)
    theta = np.empty((N, n))
    x = np.asarray(theta0, dtype=float).copy()
    theta[0] = x
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is reported below
        for k in range(N - 1):
            x = R[k] @ x + c[k]
            theta[k + 1] = x
    if not np.all(np.isfinite(theta)):
        bad = int(np.argmax(~np.all(np.isfinite(theta), axis=1)))
        when = f" at t={t[bad]:.6g}" if t is not None else f" at sample {bad}"
        raise FloatingPointError(f"estimate became non-finite{when}")
    branch = np.where(drem, Branch.DREM, Branch.SIGMA_MOD).astype(np.int8)
    return theta, branch


def parameter_error(theta_hat, theta_true):
    """Euclidean norm of the estimation error (row-wise for stacks)."""
    return np.linalg.norm(np.asarray(theta_hat, dtype=float) - np.asarray(theta_true, dtype=float),
                          axis=-1)
