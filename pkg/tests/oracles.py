"""Independent reference implementations used to check the library.

Each oracle takes a deliberately different route than the code under test
(SVD instead of Jacobi, scipy.linalg.sqrtm instead of eigh, brute-force
pair counting instead of coincidence matrices). Frozen: changes here must
never mirror changes in the library.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


def svd_directions(a: np.ndarray, j: int):
    """Top-j right singular vectors and squared singular values of a."""
    _, s, vt = np.linalg.svd(np.asarray(a, dtype=np.float64), full_matrices=False)
    j = min(j, vt.shape[0])
    return vt[:j], s[:j] ** 2


def frechet_scipy(mu1, sigma1, mu2, sigma2) -> float:
    """Frechet distance via scipy's general matrix square root."""
    diff = np.asarray(mu1) - np.asarray(mu2)
    covmean = scipy.linalg.sqrtm(np.asarray(sigma1) @ np.asarray(sigma2))
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    return float(diff @ diff + np.trace(sigma1) + np.trace(sigma2) - 2.0 * np.trace(covmean))


def krippendorff_bruteforce(table) -> float:
    """Nominal alpha by direct observed/expected disagreement counting.

    table: items x raters array of values with None/nan for missing cells.
    Counts every ordered pair of ratings within each item, weighting each
    pair by 1/(m_u - 1), then compares to the marginal expectation.
    """
    units = []
    for row in table:
        vals = [v for v in row if v is not None and v == v]
        if len(vals) >= 2:
            units.append(vals)
    if not units:
        return float("nan")
    n_total = sum(len(u) for u in units)
    # observed disagreement
    d_o = 0.0
    for u in units:
        m = len(u)
        for a in range(m):
            for b in range(m):
                if a != b and u[a] != u[b]:
                    d_o += 1.0 / (m - 1)
    d_o /= n_total
    # expected disagreement from pooled marginals
    pooled = [v for u in units for v in u]
    d_e = 0.0
    for a in range(n_total):
        for b in range(n_total):
            if a != b and pooled[a] != pooled[b]:
                d_e += 1.0
    d_e /= n_total * (n_total - 1)
    if d_e == 0.0:
        return 1.0
    return 1.0 - d_o / d_e


def central_difference_grads(f, params: dict, eps: float = 1e-6) -> dict:
    """Gradient of scalar f(params) by central differences, per tensor."""
    grads = {}
    for name, value in params.items():
        arr = np.array(value, dtype=np.float64, copy=True)
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = f({**params, name: arr.copy()})
            flat[i] = orig - eps
            lo = f({**params, name: arr.copy()})
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * eps)
        grads[name] = g
    return grads


def relative_grad_error(analytic: dict, numeric: dict) -> float:
    """Worst relative error across all tensors, scaled per tensor."""
    worst = 0.0
    for name, num in numeric.items():
        ana = np.asarray(analytic[name], dtype=np.float64)
        scale = max(np.abs(num).max(), np.abs(ana).max(), 1e-8)
        worst = max(worst, float(np.abs(ana - num).max() / scale))
    return worst
