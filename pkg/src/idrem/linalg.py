"""Small dense linear algebra used by the mixing stage.

Determinant and adjugate come from one Faddeev-LeVerrier pass, which needs no
division by the determinant and is therefore valid for singular matrices.
Extreme eigenvalues come from a cyclic Jacobi iteration. Every routine accepts
either a single ``(k, k)`` matrix or a stack ``(..., k, k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NumericalInconsistencyError",
    "MixedRegression",
    "faddeev_leverrier",
    "determinant",
    "adjugate",
    "det_adj",
    "mix",
    "mix_batch",
    "jacobi_eigenvalues",
    "min_max_eigenvalues",
]

MAX_SIZE = 16


class NumericalInconsistencyError(ArithmeticError):
    """Raised when a quantity that must be nonnegative comes out clearly negative."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


def _as_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expected square matrix (or stack), got shape {A.shape}")
    k = A.shape[-1]
    if k < 1:
        raise ValueError("matrix size must be at least 1")
    if k > MAX_SIZE:
        raise ValueError(f"matrix size {k} exceeds supported maximum {MAX_SIZE}")
    return A


def faddeev_leverrier(A):
    """Characteristic polynomial coefficients, determinant and adjugate of ``A``.

    Runs the recursion ``M_j = A M_{j-1} + c_{j-1} I``, ``c_j = -tr(A M_j) / j``.
    The last iterate gives ``adj(A) = (-1)^(k-1) M_k`` and
    ``det(A) = (-1)^k c_k``.

    Returns
    -------
    coeffs : ndarray, shape (..., k + 1)
        ``c_0 = 1, c_1, ..., c_k`` of ``det(lambda I - A)``.
    det : ndarray, shape (...)
    adj : ndarray, shape (..., k, k)
    """
    A = _as_square(A)
    k = A.shape[-1]
    batch = A.shape[:-2]
    eye = np.broadcast_to(np.eye(k), A.shape)
    coeffs = np.empty(batch + (k + 1,))
    coeffs[..., 0] = 1.0
    M = np.zeros_like(A)
    c = np.ones(batch)
    for j in range(1, k + 1):
        M = A @ M + c[..., None, None] * eye
        AM = A @ M
        c = -np.trace(AM, axis1=-2, axis2=-1) / j
        coeffs[..., j] = c
    sign = -1.0 if k % 2 == 0 else 1.0  # (-1)^(k-1)
    adj = sign * M
    det = (-1.0) ** k * c
    return coeffs, det, adj


def det_adj(A):
    """Return ``(det(A), adj(A))`` from a single Faddeev-LeVerrier pass."""
    _, det, adj = faddeev_leverrier(A)
    return det, adj


def determinant(A):
    return det_adj(A)[0]


def adjugate(A):
    return det_adj(A)[1]


@dataclass(frozen=True)
class MixedRegression:
    """Scalar regression ``Y_bar = Omega * theta + mu_bar`` and its projection ``Y``."""

    Omega: float
    Y_bar: np.ndarray
    Y: np.ndarray


def _clamp_tolerance(omega_f):
    k = omega_f.shape[-1]
    scale = np.max(np.abs(omega_f), axis=(-2, -1)) * k
    return 1e-9 * np.maximum(1.0, scale ** k)


def mix_batch(omega_f, y_f, n: int):
    """Vectorized :func:`mix` over a stack of filter states.

    Returns ``(Omega, Y_bar, Y)`` arrays with leading batch shape.
    """
    omega_f = _as_square(omega_f)
    if omega_f.shape[-1] != 2 * n:
        raise ValueError(f"filter Gram has size {omega_f.shape[-1]}, expected {2 * n}")
    y_f = np.asarray(y_f, dtype=float)
    Omega, adj = det_adj(omega_f)
    tol = _clamp_tolerance(omega_f)
    bad = Omega < -tol
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        raise NumericalInconsistencyError(
            f"negative determinant {np.atleast_1d(Omega)[tuple(idx)]:.3e} of a PSD filter "
            f"Gram (tolerance {np.atleast_1d(tol)[tuple(idx)]:.3e}) at batch index {tuple(idx)}",
            index=tuple(int(i) for i in idx),
        )
    Omega = np.where(Omega <= 0.0, 0.0, Omega)  # also turns -0.0 into 0.0
    Y_bar = np.einsum("...ij,...j->...i", adj, y_f)
    return Omega, Y_bar, Y_bar[..., :n].copy()


def mix(state, n: int) -> MixedRegression:
    """Mix one filter state into the scalar regression.

    ``Omega = det(omega_f)`` (tiny negative rounding clamped to zero),
    ``Y_bar = adj(omega_f) y_f`` and ``Y`` keeps the first ``n`` entries, which
    hold the parameter values under the lift's block ordering.
    """
    Omega, Y_bar, Y = mix_batch(state.omega_f, state.y_f, n)
    return MixedRegression(float(Omega), Y_bar, Y)


def jacobi_eigenvalues(A, tol: float = 1e-12, max_sweeps: int = 50):
    """Eigenvalues of symmetric ``A`` (or a stack) by cyclic Jacobi rotations.

    Rotations are applied to the whole stack at once; iteration stops when the
    off-diagonal Frobenius norm falls below ``tol`` times the matrix norm.
    Returned eigenvalues are sorted ascending along the last axis.
    """
    A = _as_square(A)
    k = A.shape[-1]
    asym = np.max(np.abs(A - np.swapaxes(A, -1, -2)), initial=0.0)
    if asym > 1e-9 * max(1.0, float(np.max(np.abs(A), initial=0.0))):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    batch = A.shape[:-2]
    if k == 1:
        return A[..., 0].copy()
    A = A.reshape((-1, k, k)).copy()
    scale = np.sqrt(np.sum(A * A, axis=(1, 2)))
    scale = np.where(scale > 0, scale, 1.0)
    off_mask = ~np.eye(k, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[:, off_mask] ** 2, axis=1))
        if np.all(off <= tol * scale):
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = A[:, p, q]
                app = A[:, p, p]
                aqq = A[:, q, q]
                active = np.abs(apq) > 1e-300
                with np.errstate(over="ignore", invalid="ignore"):
                    theta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
                    t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) Givens rotation
                Ap = A[:, :, p].copy()
                Aq = A[:, :, q].copy()
                A[:, :, p] = c[:, None] * Ap - s[:, None] * Aq
                A[:, :, q] = s[:, None] * Ap + c[:, None] * Aq
                Ap = A[:, p, :].copy()
                Aq = A[:, q, :].copy()
                A[:, p, :] = c[:, None] * Ap - s[:, None] * Aq
                A[:, q, :] = s[:, None] * Ap + c[:, None] * Aq
    eig = np.sort(np.diagonal(A, axis1=1, axis2=2), axis=1)
    return eig.reshape(batch + (k,))


def min_max_eigenvalues(A):
    """``(lambda_min, lambda_max)`` of a symmetric matrix, or arrays of them for a stack."""
    A = _as_square(A)
    batch = A.shape[:-2]
    eig = jacobi_eigenvalues(A)
    lo, hi = eig[..., 0], eig[..., -1]
    if not batch:
        return float(lo), float(hi)
    return lo, hi
