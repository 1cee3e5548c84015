"""Theoretical error bounds and trace audits.

Constants are evaluated literally from scenario suprema and run observations:

* gradient-branch contraction ``a1``, ``eta``, ``b1``;
* determinant-branch contraction ``a``, ``DeltaT``, ``b`` using the observed
  worst-case time ``T0k`` at which the determinant first reaches ``kappa``;
* determinant envelope ``Omega_LB``/``Omega_UB`` and the mixed-disturbance
  bound ``mu_max``.

The filtered Gram is ``2n x 2n``, so determinant exponents use ``2n``.
``Lambda_max`` (the bound on ``||Lambda(t, t_i)||`` over an interval) is an
interpretation: the sup of the spectral norm of ``[I, (t - t_i) I]``, i.e.
``sqrt(1 + T^2)``, evaluated numerically.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .lift import lambda_matrix
from .linalg import min_max_eigenvalues

__all__ = [
    "BoundInputs",
    "BoundConstants",
    "compute_constants",
    "error_bound_fe",
    "asymptotic_bound",
    "error_bound_post",
    "lambda_max_norm",
    "crossing_times",
    "audit_omega",
]


@dataclass(frozen=True)
class BoundInputs:
    omega_max: float
    Theta_max: float
    Theta_dot_max: float
    Theta_ddot_max: float
    d_max: float
    alpha2_lifted: float
    delta_k: float
    Lambda_max: float
    T: float
    beta: float
    gamma0: float
    Gamma: np.ndarray
    sigma: float
    n: int
    T0k_offset: float  # worst observed T0k - t_k; T when some interval never crossed kappa
    Omega_T0k: float  # smallest Omega at a crossing; 0 when some interval never crossed
    Delta1_max: float = 0.0


@dataclass(frozen=True)
class BoundConstants:
    a1: float
    eta: float
    b1: float
    a: float
    DeltaT: float
    b: float
    mu_max: float
    Omega_LB: float
    Omega_UB: float
    eps_max: float
    asymptotic_bound: float
    gamma0_min: float
    contraction: float  # a * exp(-gamma0 * DeltaT)
    Theta_dot_max: float
    T: float
    gamma0: float
    vacuous: bool

    def to_dict(self):
        return asdict(self)


def lambda_max_norm(T: float, n: int, samples: int = 101) -> float:
    """Sup over ``[0, T]`` of the spectral norm of ``Lambda(t_i + tau, t_i)``."""
    best = 0.0
    for tau in np.linspace(0.0, T, samples):
        L = lambda_matrix(tau, 0.0, n)
        best = max(best, math.sqrt(min_max_eigenvalues(L @ L.T)[1]))
    return best


def compute_constants(inp: BoundInputs) -> BoundConstants:
    Gamma = np.atleast_2d(np.asarray(inp.Gamma, dtype=float))
    lo, hi = min_max_eigenvalues(np.linalg.inv(Gamma))
    a1 = math.sqrt(hi / lo)
    eta = inp.sigma / (2.0 * hi)
    rs = math.sqrt(inp.sigma)
    b1 = a1 * ((inp.d_max + inp.T * inp.Theta_dot_max * inp.omega_max) + rs * inp.Theta_max) / rs

    size = 2 * inp.n
    mu_max = ((0.5 * inp.T ** 2 * inp.Theta_ddot_max * inp.omega_max ** 2
               + inp.d_max * inp.omega_max) * inp.delta_k * inp.Lambda_max / inp.beta ** 2
              * math.sqrt(size))
    Omega_UB = (inp.delta_k / inp.beta) ** size
    Omega_LB = math.exp(-size * inp.beta * inp.T) * inp.alpha2_lifted ** size
    eps_max = 0.5 * inp.Theta_ddot_max * inp.T ** 2 * inp.omega_max + inp.d_max

    a = a1 * math.exp(-eta * inp.T0k_offset)
    DeltaT = 0.5 * (inp.T - inp.T0k_offset)
    vacuous = DeltaT <= 0 or inp.Omega_T0k <= 0
    if inp.Omega_T0k > 0:
        b = math.exp(-inp.gamma0 * DeltaT) * b1 + mu_max / inp.Omega_T0k
    else:
        b = math.inf
    q = a * math.exp(-inp.gamma0 * DeltaT)
    gamma0_min = math.log(1.0 / a) / DeltaT if DeltaT > 0 else math.inf
    consts = BoundConstants(a1, eta, b1, a, DeltaT, b, mu_max, Omega_LB, Omega_UB, eps_max,
                            math.nan, gamma0_min, q, inp.Theta_dot_max, inp.T, inp.gamma0,
                            vacuous)
    return _with_asymptotic(consts, inp.Delta1_max)


def _with_asymptotic(c: BoundConstants, Delta1_max: float) -> BoundConstants:
    return replace(c, asymptotic_bound=asymptotic_bound(c, Delta1_max))


def _geometric(q: float, j: int) -> float:
    """``(q^j - 1) / (q - 1)``, i.e. ``sum_{l < j} q^l``."""
    if j <= 0:
        return 0.0
    if abs(q - 1.0) < 1e-12:
        return float(j)
    return (q ** j - 1.0) / (q - 1.0)


def error_bound_fe(k: int, theta_tilde_0: float, consts: BoundConstants, Delta1_max: float) -> float:
    """Bound on the error at the end of FE interval ``k`` (counted from ``t_r_plus``)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if consts.vacuous:
        return math.inf
    q = consts.contraction
    return (q ** (k + 1) * theta_tilde_0
            + _geometric(q, k) * q * Delta1_max
            + _geometric(q, k + 1) * consts.b
            + consts.Theta_dot_max * consts.T)


def asymptotic_bound(consts: BoundConstants, Delta1_max: float) -> float:
    """Limit of :func:`error_bound_fe` as ``k -> inf``; ``inf`` when it does not contract."""
    q = consts.contraction
    if consts.vacuous or not q < 1.0 or not math.isfinite(consts.b):
        return math.inf
    return (q * Delta1_max + consts.b) / (1.0 - q) + consts.Theta_dot_max * consts.T


def error_bound_post(i: int, theta_tilde_te: float, consts: BoundConstants,
                     Delta1_max: float) -> float:
    """Bound on the error in the ``i``-th interval after excitation is lost."""
    if i < 0:
        raise ValueError("i must be nonnegative")
    p = consts.a1 * math.exp(-consts.eta * consts.T)
    return (p ** (i + 1) * theta_tilde_te
            + _geometric(p, i) * p * Delta1_max
            + _geometric(p, i + 1) * consts.b1
            + consts.Theta_dot_max * consts.T)


def _segments(reset):
    starts = np.flatnonzero(np.asarray(reset, dtype=bool))
    if starts.size == 0 or starts[0] != 0:
        starts = np.r_[0, starts]
    return zip(starts, np.r_[starts[1:], len(reset)])


def crossing_times(t, reset, interval, Omega, kappa: float):
    """Per interval: ``(index, t_start, T0k or None, Omega(T0k) or None)``."""
    out = []
    for a, b in _segments(reset):
        hit = np.flatnonzero(Omega[a:b] >= kappa)
        if hit.size:
            j = a + hit[0]
            out.append((int(interval[a]), float(t[a]), float(t[j]), float(Omega[j])))
        else:
            out.append((int(interval[a]), float(t[a]), None, None))
    return out


def audit_omega(t, reset, interval, Omega, kappa: float, *, beta: float, n: int,
                       lifted_lmax=None, gram_scale=None, mu=None, mu_max: float | None = None):
    """Audit a run's determinant trace interval by interval.

    Counts negative values and within-interval decreases of ``Omega`` (beyond
    the determinant's rounding level ``4 * 2n * eps * gram_scale^(2n)`` when
    ``gram_scale`` is supplied), records the first crossing of ``kappa``, and
    compares ``Omega`` with ``(delta_k / beta)^(2n)`` computed from the
    interval's own ``lifted_lmax`` sup. When ``mu`` (per-sample norm of the
    mixed disturbance, noise-free runs) and ``mu_max`` are given, their
    exceedances are counted too.
    """
    t = np.asarray(t)
    Omega = np.asarray(Omega, dtype=float)
    size = 2 * n
    eps = np.finfo(float).eps
    rows = []
    for a, b in _segments(reset):
        seg = Omega[a:b]
        dec = seg[:-1] - seg[1:]
        if gram_scale is not None:
            tol = 4 * size * eps * np.asarray(gram_scale[a + 1:b], dtype=float) ** size
        else:
            tol = 0.0
        hit = np.flatnonzero(seg >= kappa)
        row = {
            "interval": int(interval[a]),
            "t_start": float(t[a]),
            "negative": int(np.sum(seg < 0)),
            "nonmonotone": int(np.sum(dec > tol)),
            "T0k": float(t[a + hit[0]]) if hit.size else None,
            "Omega_T0k": float(seg[hit[0]]) if hit.size else None,
            "Omega_max": float(seg.max()),
        }
        if lifted_lmax is not None:
            delta = float(np.max(lifted_lmax[a:b]))
            ub = (delta / beta) ** size
            row["delta_k"] = delta
            row["Omega_UB"] = ub
            row["above_UB"] = int(np.sum(seg > ub))
        if mu is not None and mu_max is not None:
            row["mu_obs_max"] = float(np.max(mu[a:b]))
            row["mu_above_max"] = int(np.sum(mu[a:b] > mu_max))
        rows.append(row)
    summary = {
        "intervals": len(rows),
        "negative": sum(r["negative"] for r in rows),
        "nonmonotone": sum(r["nonmonotone"] for r in rows),
        "crossed": sum(r["T0k"] is not None for r in rows),
    }
    if lifted_lmax is not None:
        summary["above_UB"] = sum(r["above_UB"] for r in rows)
    if mu is not None and mu_max is not None:
        summary["mu_above_max"] = sum(r["mu_above_max"] for r in rows)
    return {"summary": summary, "intervals": rows}
