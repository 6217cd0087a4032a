"""Dense small-scale linear algebra used by every other module.

Everything here works on plain numpy arrays. Tolerances default to
``DEFAULT_TOL`` and can be overridden per call.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-10

__all__ = [
    "DEFAULT_TOL",
    "ConvergenceError",
    "NotPSDError",
    "adjoint",
    "operator_norm",
    "principal_sqrt_psd",
    "cholesky_psd",
    "orth",
    "null_space",
    "orth_complement",
]


class ConvergenceError(RuntimeError):
    """Iterative routine ran out of iterations.

    ``estimate`` carries the best value found so far.
    """

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


class NotPSDError(ValueError):
    pass


def as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def adjoint(M) -> np.ndarray:
    """Adjoint (transpose) of a real matrix."""
    return np.ascontiguousarray(as_matrix(M).T)


def operator_norm(M, tol: float = DEFAULT_TOL, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest singular value of ``M`` by power iteration on ``M^T M``.

    Starts from the normalized all-ones vector. If the Rayleigh quotient
    stalls at zero (start orthogonal to the top singular space), restarts
    once from a seeded random vector.

    Raises
    ------
    ConvergenceError
        If the relative change never drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(M)
    m, n = M.shape
    if m == 0 or n == 0 or not np.any(M):
        return 0.0
    G = M.T @ M
    # The seeded restart guards against a start orthogonal to the top
    # singular space; the larger Rayleigh quotient wins.
    starts = [np.ones(n) / np.sqrt(n), np.random.default_rng(seed).standard_normal(n)]
    best = 0.0
    for v in starts:
        v = v / np.linalg.norm(v)
        lam = float(v @ G @ v)
        for _ in range(max_iter):
            w = G @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                lam = 0.0
                break
            v = w / nw
            new = float(v @ G @ v)
            if abs(new - lam) <= 1e-2 * tol * new:
                lam = new
                break
            lam = new
        else:
            raise ConvergenceError("power iteration did not converge", float(np.sqrt(max(best, lam))))
        best = max(best, lam)
    return float(np.sqrt(best))


def _check_symmetric_psd(S: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    S = as_matrix(S)
    if S.shape[0] != S.shape[1]:
        raise ValueError("matrix must be square")
    scale = 1.0 + np.abs(S).max(initial=0.0)
    if np.abs(S - S.T).max(initial=0.0) > tol * scale:
        raise NotPSDError("not PSD: matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    if w.size and w.min() < -tol * scale:
        raise NotPSDError(f"not PSD: smallest eigenvalue {w.min():.3e}")
    return np.clip(w, 0.0, None), V


def principal_sqrt_psd(S, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Symmetric PSD square root; eigenvalues in ``[-tol, 0)`` are clamped to 0."""
    w, V = _check_symmetric_psd(S, tol)
    R = (V * np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)


def cholesky_psd(S, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Lower-triangular ``R`` with ``R R^T = S`` for PSD (possibly singular) ``S``.

    Outer-product Cholesky; a pivot at or below ``tol * scale`` zeroes its
    column instead of dividing.
    """
    _check_symmetric_psd(S, tol)
    S = as_matrix(S)
    n = S.shape[0]
    scale = 1.0 + np.abs(S).max(initial=0.0)
    W = 0.5 * (S + S.T)
    R = np.zeros_like(W)
    for j in range(n):
        d = W[j, j]
        if d <= tol * scale:
            continue
        col = W[j:, j] / np.sqrt(d)
        R[j:, j] = col
        W[j:, j:] -= np.outer(col, col)
    return R


def orth(M, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the range of ``M``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return U[:, :rank]


def null_space(M, n: int | None = None, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``M``."""
    M = np.asarray(M, dtype=float)
    if n is None:
        n = M.shape[1]
    if M.size == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return Vt[rank:].T.copy()


def orth_complement(V, n: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(V)`` in R^n."""
    V = np.asarray(V, dtype=float).reshape(n, -1)
    if V.shape[1] == 0:
        return np.eye(n)
    return null_space(V.T, n)
