import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from idrem.filters import FilterState
from idrem.linalg import (
    MAX_SIZE,
    NumericalInconsistencyError,
    adjugate,
    det_adj,
    determinant,
    jacobi_eigenvalues,
    min_max_eigenvalues,
    mix,
    mix_batch,
)
from tests.oracles import bisection_eigenvalues, cofactor_adjugate, lu_det


@pytest.mark.parametrize("k", [1, 2, 3, 5, 8])
def test_scaled_identity_determinant(k):
    c = 1.7
    assert determinant(c * np.eye(k)) == pytest.approx(c ** k, rel=1e-14)


def test_two_by_two_hand_values():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert determinant(A) == pytest.approx(3.0, abs=1e-14)
    np.testing.assert_allclose(adjugate(A), [[2.0, -1.0], [-1.0, 2.0]], atol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 4, 7])
def test_identity_adjugate(k):
    np.testing.assert_allclose(adjugate(np.eye(k)), np.eye(k), atol=1e-15)


def test_spd_determinant_matches_lu(rng):
    for _ in range(200):
        B = rng.standard_normal((4, 4))
        A = B @ B.T + 4 * np.eye(4)
        assert determinant(A) == pytest.approx(lu_det(A), rel=1e-10)


@pytest.mark.parametrize("k", [3, 4, 6, 8])
def test_rank_one_adjugate_is_zero(rng, k):
    v = rng.standard_normal(k)
    adj = adjugate(np.outer(v, v))
    # the recursion leaves rounding of order eps * |A|^(k-1) in place of the exact zero
    assert np.max(np.abs(adj)) <= 1e-14 * (v @ v) ** (k - 1)
    unit = v / np.linalg.norm(v)
    assert np.max(np.abs(adjugate(np.outer(unit, unit)))) <= 1e-12
    np.testing.assert_allclose(cofactor_adjugate(np.outer(unit, unit)), 0.0, atol=1e-12)


@pytest.mark.parametrize("k", range(1, 9))
def test_adjugate_matches_cofactor_oracle(rng, k):
    A = rng.standard_normal((k, k))
    np.testing.assert_allclose(adjugate(A), cofactor_adjugate(A), rtol=1e-9, atol=1e-10)


def test_singular_matrix_still_has_adjugate():
    # rank 2 in 3-D: adjugate is nonzero rank 1, determinant zero
    A = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.5], [0.0, 1.0, 1.0]])
    A[1] = 2 * A[0]
    d, adj = det_adj(A)
    assert d == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(adj, cofactor_adjugate(A), atol=1e-12)
    np.testing.assert_allclose(adj @ A, 0.0, atol=1e-12)


def test_batched_matches_single(rng):
    A = rng.standard_normal((5, 3, 4, 4))
    d, adj = det_adj(A)
    for idx in np.ndindex(5, 3):
        d1, a1 = det_adj(A[idx])
        assert d[idx] == d1
        np.testing.assert_array_equal(adj[idx], a1)


def test_size_limit():
    with pytest.raises(ValueError):
        determinant(np.eye(MAX_SIZE + 1))
    with pytest.raises(ValueError):
        determinant(np.ones((2, 3)))


matrices = st.integers(2, 8).flatmap(
    lambda k: arrays(np.float64, (k, k), elements=st.floats(-10, 10, allow_nan=False)))


@given(matrices)
def test_adjugate_identity_property(A):
    A = 0.5 * (A + A.T)
    d, adj = det_adj(A)
    k = len(A)
    scale = max(1.0, np.linalg.norm(A, 2)) ** k
    assert np.max(np.abs(adj @ A - d * np.eye(k))) <= 1e-9 * scale


@given(matrices)
def test_transpose_and_scaling_properties(A):
    k = len(A)
    d = determinant(A)
    scale = max(1.0, np.linalg.norm(A, 2)) ** k
    assert abs(determinant(A.T) - d) <= 1e-10 * scale
    assert abs(determinant(-A) - (-1) ** k * d) <= 1e-10 * scale


# mixing


def test_mix_identity_gram():
    n = 2
    v = np.array([1.0, -2.0, 3.0, 0.5])
    m = mix(FilterState(np.eye(2 * n), v), n)
    assert m.Omega == pytest.approx(1.0)
    np.testing.assert_allclose(m.Y_bar, v, atol=1e-14)
    np.testing.assert_allclose(m.Y, v[:n], atol=1e-14)


def test_mix_zero_gram():
    m = mix(FilterState.zeros(4), 2)
    assert m.Omega == 0.0 and not np.signbit(m.Omega)
    np.testing.assert_array_equal(m.Y_bar, 0.0)


def test_mix_rank_one_gram():
    v = np.array([0.3, -1.2, 0.7, 2.0])
    m = mix(FilterState(0.25 * np.outer(v, v), 0.25 * v * 1.5), 2)
    assert m.Omega == 0.0
    np.testing.assert_allclose(m.Y_bar, 0.0, atol=1e-12)


def test_mix_recovers_parameters_from_exact_regression(rng):
    # y_f = omega_f theta  =>  Y_bar = Omega theta
    B = rng.standard_normal((4, 4))
    G = B @ B.T
    theta = rng.standard_normal(4)
    m = mix(FilterState(G, G @ theta), 2)
    np.testing.assert_allclose(m.Y_bar, m.Omega * theta, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(m.Y / m.Omega, theta[:2], rtol=1e-8)


def test_mix_clamps_rounding_negatives():
    G = np.diag([1.0, 1.0, 1.0, -1e-12])
    Omega, _, _ = mix_batch(G, np.zeros(4), 2)
    assert Omega == 0.0


def test_mix_rejects_clearly_negative_determinant():
    G = np.diag([1.0, 1.0, 1.0, -1e-3])
    with pytest.raises(NumericalInconsistencyError):
        mix(FilterState(G, np.zeros(4)), 2)


def test_mix_dimension_check():
    with pytest.raises(ValueError):
        mix(FilterState.zeros(3), 2)


# eigenvalues


def test_eigen_examples():
    assert min_max_eigenvalues(np.diag([1.0, 3.0])) == pytest.approx((1.0, 3.0))
    assert min_max_eigenvalues(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx((1.0, 3.0))


def test_jacobi_matches_inertia_bisection(rng):
    for _ in range(20):
        B = rng.standard_normal((4, 4))
        A = 0.5 * (B + B.T)
        np.testing.assert_allclose(jacobi_eigenvalues(A), bisection_eigenvalues(A), atol=1e-8)


def test_jacobi_batched_and_asymmetric_rejected(rng):
    B = rng.standard_normal((6, 5, 5))
    A = B + np.swapaxes(B, 1, 2)
    ev = jacobi_eigenvalues(A)
    np.testing.assert_allclose(ev, np.linalg.eigvalsh(A), atol=1e-10)
    lo, hi = min_max_eigenvalues(A)
    np.testing.assert_allclose(lo, ev[:, 0])
    with pytest.raises(ValueError):
        jacobi_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(st.integers(1, 8).flatmap(
    lambda k: arrays(np.float64, (k, k), elements=st.floats(-100, 100, allow_nan=False))))
def test_jacobi_residual_property(B):
    A = 0.5 * (B + B.T)
    ev = jacobi_eigenvalues(A)
    ref = np.linalg.eigvalsh(A)
    assert np.all(np.diff(ev) >= 0)
    assert np.max(np.abs(ev - ref)) <= 1e-10 * max(1.0, np.max(np.abs(A)))
