"""Frechet distance between feature distributions, and checkpoint selection.

Scores use the shallow feature extractor by default, so they are internally
comparable across checkpoints of the same run but are not on the scale of
published scores computed with deep features. Reports label them
"FD (shallow features)".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atlas import extract_features
from .errors import InvalidDimension, InvalidInput, NumericalFailure
from .generator import LatentCode, StyleWeights, map_latent, synthesize

EXTRACTOR_ID = "shallow-70d"
_NEG_EIG_TOL = 1e-8


@dataclass(frozen=True)
class GaussianSummary:
    """Mean and covariance of a feature set."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if mu.ndim != 1 or sigma.shape != (mu.shape[0], mu.shape[0]):
            raise InvalidDimension(
                f"need mu of shape (d,) and sigma of shape (d, d), got {mu.shape} and {sigma.shape}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise InvalidInput("summary contains non-finite values")
        if not np.allclose(sigma, sigma.T, atol=1e-10):
            raise InvalidInput("covariance must be symmetric within 1e-10")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", 0.5 * (sigma + sigma.T))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def fit_gaussian(features) -> GaussianSummary:
    """Sample mean and unbiased (n-1) covariance of feature vectors."""
    rows = [np.asarray(getattr(f, "values", f), dtype=np.float64) for f in features]
    if len(rows) < 2:
        raise InvalidInput(f"need at least 2 feature vectors, got {len(rows)}")
    x = np.stack(rows, axis=0)
    if not np.all(np.isfinite(x)):
        raise InvalidInput("features contain non-finite values")
    mu = x.mean(axis=0)
    centered = x - mu
    sigma = centered.T @ centered / (x.shape[0] - 1)
    return GaussianSummary(mu=mu, sigma=0.5 * (sigma + sigma.T))


def _clamped_sqrt_eigvals(eigvals: np.ndarray, context: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(eigvals), initial=0.0)))
    if np.any(eigvals < -_NEG_EIG_TOL * scale):
        worst = float(eigvals.min())
        raise NumericalFailure(f"{context}: eigenvalue {worst:.3e} below the clamping tolerance")
    return np.sqrt(np.maximum(eigvals, 0.0))


def _sqrtm_psd(sigma: np.ndarray, context: str) -> np.ndarray:
    vals, vecs = np.linalg.eigh(sigma)
    roots = _clamped_sqrt_eigvals(vals, context)
    return (vecs * roots) @ vecs.T


def frechet_distance(g1: GaussianSummary, g2: GaussianSummary) -> float:
    """||mu1-mu2||^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2).

    Matrix square roots go through symmetric eigendecomposition; small
    negative eigenvalues (within 1e-8 of zero, relative) are clamped, larger
    ones raise NumericalFailure. The result is clamped to zero when it lands
    within tolerance below it.
    """
    if g1.dim != g2.dim:
        raise InvalidDimension(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    diff = g1.mu - g2.mu
    s1_root = _sqrtm_psd(g1.sigma, "covariance 1")
    inner = s1_root @ g2.sigma @ s1_root
    inner = 0.5 * (inner + inner.T)
    vals, _ = np.linalg.eigh(inner)
    tr_sqrt = float(np.sum(_clamped_sqrt_eigvals(vals, "cross term")))
    fd = float(diff @ diff + np.trace(g1.sigma) + np.trace(g2.sigma) - 2.0 * tr_sqrt)
    if fd < 0:
        if fd < -_NEG_EIG_TOL * max(1.0, abs(float(np.trace(g1.sigma) + np.trace(g2.sigma)))):
            raise NumericalFailure(f"Frechet distance {fd:.3e} below the clamping tolerance")
        fd = 0.0
    return fd


def fd_from_feature_sets(features1, features2) -> float:
    return frechet_distance(fit_gaussian(features1), fit_gaussian(features2))


def sample_images(weights: StyleWeights, n: int, seed: int = 0, psi: float = 1.0,
                  noise_seed: int | None = None):
    """Deterministic batch of generated images from the Z prior."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        z = LatentCode(rng.standard_normal(weights.latent_dim), space="Z")
        w = map_latent(z, weights, psi=psi)
        out.append(synthesize(w, weights, noise_seed=noise_seed))
    return out


def fid_between_sets(real_images, weights: StyleWeights, gen_count: int = 200,
                     extractor=extract_features, seed: int = 0,
                     noise_seed: int | None = None) -> float:
    """FD (shallow features) between a real set and freshly generated images.

    Generates gen_count images without truncation (psi=1), featurizes both
    sets with `extractor`, and returns the Frechet distance.
    """
    if len(real_images) < 2:
        raise InvalidInput(f"need at least 2 real images, got {len(real_images)}")
    if gen_count < 2:
        raise InvalidInput(f"need at least 2 generated images, got {gen_count}")
    gen = sample_images(weights, gen_count, seed=seed, psi=1.0, noise_seed=noise_seed)
    return fd_from_feature_sets(
        [extractor(i) for i in real_images],
        [extractor(i) for i in gen],
    )


def select_checkpoint(checkpoints, real_images, gen_count: int = 200,
                      extractor=extract_features, seed: int = 0):
    """Index of the checkpoint with the lowest FD score, plus all scores.

    Ties resolve to the earliest checkpoint.
    """
    if not checkpoints:
        raise InvalidInput("need at least one checkpoint")
    scores = [
        fid_between_sets(real_images, w, gen_count=gen_count, extractor=extractor, seed=seed)
        for w in checkpoints
    ]
    best = int(np.argmin(scores))
    return best, scores
