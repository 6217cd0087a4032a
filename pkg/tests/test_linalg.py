import numpy as np
import pytest
from hypothesis import given

from pdsplit.linalg import (
    NotPSDError,
    adjoint,
    as_matrix,
    cholesky_psd,
    null_space,
    operator_norm,
    orth,
    orth_complement,
    principal_sqrt_psd,
)

from strategies import matrices, seeds


def test_adjoint_identity_and_rotation():
    assert np.array_equal(adjoint(np.eye(2)), np.eye(2))
    assert np.array_equal(adjoint([[0.0, -1.0], [1.0, 0.0]]), [[0.0, 1.0], [-1.0, 0.0]])


def test_adjoint_inner_product_identity(rng):
    M = rng.standard_normal((3, 2))
    Mt = adjoint(M)
    for _ in range(100):
        x, y = rng.standard_normal(2), rng.standard_normal(3)
        assert abs((M @ x) @ y - x @ (Mt @ y)) <= 1e-12 * (1 + np.linalg.norm(x) * np.linalg.norm(y))


@given(matrices(4, 3), seeds)
def test_adjoint_pairing_property(M, seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal(3), r.standard_normal(4)
    scale = 1 + np.abs(M).max()
    assert abs((M @ x) @ y - x @ (adjoint(M) @ y)) <= 1e-12 * scale * (1 + np.linalg.norm(x) * np.linalg.norm(y))


def test_as_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        as_matrix([1.0, 2.0])
    with pytest.raises(ValueError):
        as_matrix([[np.nan]])


def test_operator_norm_trivial():
    assert operator_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)
    assert operator_norm([[0.0, -1.0], [1.0, 0.0]]) == pytest.approx(1.0, rel=1e-12)
    assert operator_norm(np.zeros((2, 3))) == 0.0


def test_operator_norm_matches_svd(rng):
    for _ in range(20):
        M = rng.standard_normal((4, 3))
        ref = np.linalg.svd(M, compute_uv=False)[0]
        assert abs(operator_norm(M) - ref) <= 1e-10 * ref


def test_operator_norm_start_orthogonal_to_top_space():
    # the all-ones start lies in the small singular direction
    M = np.diag([1.0, 5.0]) @ np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert operator_norm(M) == pytest.approx(5.0, rel=1e-10)


@given(matrices(3, 5))
def test_operator_norm_adjoint_invariant(M):
    a, b = operator_norm(M), operator_norm(adjoint(M))
    assert abs(a - b) <= 1e-9 * (1 + a)


def test_principal_sqrt_examples():
    assert np.allclose(principal_sqrt_psd(np.eye(3)), np.eye(3), atol=1e-14)
    assert np.allclose(principal_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)


def test_principal_sqrt_of_isometry_complement_is_zero(rng):
    sigma, tau = 0.5, 2.0
    Q = np.linalg.qr(rng.standard_normal((4, 3)))[0].T
    L = Q / np.sqrt(sigma * tau)
    R = principal_sqrt_psd(np.eye(3) - sigma * tau * L @ L.T)
    assert np.abs(R).max() <= 1e-7  # sqrt of O(eps) clamps


def test_principal_sqrt_properties(rng):
    for _ in range(20):
        G = rng.standard_normal((4, 4))
        S = G @ G.T
        R = principal_sqrt_psd(S)
        assert np.array_equal(R, R.T)
        assert np.linalg.eigvalsh(R).min() >= -1e-10
        assert np.linalg.norm(R @ R - S, 2) <= 1e-10 * (1 + np.linalg.norm(S, 2))


def test_sqrt_clamps_tiny_negative_eigenvalue():
    R = principal_sqrt_psd(np.diag([1.0, -1e-12]))
    assert np.allclose(R, np.diag([1.0, 0.0]))


@pytest.mark.parametrize("S", [np.diag([1.0, -1.0]), np.array([[1.0, 2.0], [0.0, 1.0]])])
def test_not_psd_rejected(S):
    with pytest.raises(NotPSDError, match="not PSD"):
        principal_sqrt_psd(S)
    with pytest.raises(NotPSDError, match="not PSD"):
        cholesky_psd(S)


def test_cholesky_examples(rng):
    assert np.allclose(cholesky_psd(np.eye(3)), np.eye(3))
    assert np.allclose(cholesky_psd(np.diag([4.0, 0.0])), np.diag([2.0, 0.0]))
    for _ in range(20):
        G = rng.standard_normal((4, 4))
        S = G @ G.T
        R = cholesky_psd(S)
        assert np.allclose(np.triu(R, 1), 0.0)
        assert np.linalg.norm(R @ R.T - S, 2) <= 1e-10


def test_cholesky_singular(rng):
    G = rng.standard_normal((4, 2))
    S = G @ G.T
    R = cholesky_psd(S)
    assert np.linalg.norm(R @ R.T - S, 2) <= 1e-9


def test_bases(rng):
    M = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
    N = null_space(M)
    assert N.shape == (4, 2)
    assert np.abs(M @ N).max() <= 1e-10
    assert np.allclose(N.T @ N, np.eye(2))
    Q = orth(M)
    assert Q.shape == (5, 2)
    C = orth_complement(Q, 5)
    assert C.shape == (5, 3)
    assert np.abs(Q.T @ C).max() <= 1e-12
