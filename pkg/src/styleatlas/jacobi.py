"""Cyclic Jacobi eigendecomposition for symmetric matrices.

A deliberately self-contained solver: rotations are applied pair by pair in
row-cyclic order until the off-diagonal mass is negligible relative to the
total Frobenius norm. Used for the closed-form factorization spectrum and as
an independent cross-check against library decompositions elsewhere.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidDimension, InvalidInput, NumericalFailure

DEFAULT_TOL = 1e-12
MAX_SWEEPS = 100


def _offdiag_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def symmetric_eigh_jacobi(matrix: np.ndarray, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted in descending
    order and eigenvectors as the corresponding columns. Convergence is
    declared when the off-diagonal Frobenius norm drops below `tol` times the
    full Frobenius norm; failing to get there within `max_sweeps` sweeps
    raises NumericalFailure.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidDimension(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix contains non-finite entries")
    if not np.allclose(a, a.T, atol=1e-10 * max(1.0, np.abs(a).max())):
        raise InvalidInput("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v

    total = np.linalg.norm(a)
    if total == 0.0:
        return np.zeros(n), v

    for _ in range(max_sweeps):
        if _offdiag_norm(a) <= tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-300 * abs(diff):
                    # rotation angle underflows; the element is already zero
                    # at working precision
                    a[p, q] = a[q, p] = 0.0
                    continue
                # Rotation angle chosen to zero a[p, q]; the usual stable
                # formula keeps |t| <= 1, with a large-theta branch so
                # theta^2 cannot overflow.
                theta = diff / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NumericalFailure(
            f"Jacobi sweep limit {max_sweeps} reached with relative off-diagonal "
            f"norm {_offdiag_norm(a) / total:.3e}"
        )

    eigvals = a.diagonal().copy()
    order = np.argsort(eigvals)[::-1]
    return eigvals[order], v[:, order]
