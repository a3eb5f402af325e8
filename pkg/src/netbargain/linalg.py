"""Dense Gaussian elimination with partial pivoting.

Kept dependency-free so the fixed-point solver and the determinant oracle do
not share code paths with numpy's LAPACK-backed routines used in tests.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularSystem


def lu_factor(M):
    """Return ``(lu, perm, pivots)`` with ``M[perm] = L @ U`` packed into ``lu``."""
    lu = np.array(M, dtype=np.float64)
    if lu.ndim != 2 or lu.shape[0] != lu.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {lu.shape}")
    n = lu.shape[0]
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        piv = lu[k, k]
        if piv != 0.0 and k + 1 < n:
            lu[k + 1 :, k] /= piv
            lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, perm, np.diag(lu).copy()


def solve(M, rhs, rel_tol: float = 1e-12) -> np.ndarray:
    """Solve ``M x = rhs``; raises SingularSystem on a negligible pivot."""
    lu, perm, pivots = lu_factor(M)
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    if np.any(np.abs(pivots) <= rel_tol * scale):
        k = int(np.argmin(np.abs(pivots)))
        raise SingularSystem(f"pivot {k} is {pivots[k]:.3e}; matrix is singular to working precision")
    n = lu.shape[0]
    y = np.asarray(rhs, dtype=np.float64)[perm].copy()
    for i in range(n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1 :] @ y[i + 1 :]) / lu[i, i]
    return y


def normalized_det(M) -> float:
    """``|det M|`` divided by the product of ``max(1, |pivot|)``.

    Equivalently the product of ``min(1, |pivot|)``; near zero exactly when
    some pivot collapses, independent of how many pivots exceed one.
    """
    _, _, pivots = lu_factor(M)
    mags = np.abs(pivots)
    return float(np.prod(mags) / np.prod(np.maximum(1.0, mags)))
