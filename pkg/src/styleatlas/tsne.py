"""Exact t-SNE for desk-scale point sets.

Plain O(n^2) formulation: per-point Gaussian bandwidths calibrated to a
target perplexity by binary search, Student-t low-dimensional affinities,
gradient descent with momentum, adaptive per-coordinate gains, and early
exaggeration. Sized for n up to a couple thousand points, which keeps every
quantity exactly computable and checkable.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NumericalWarning

logger = logging.getLogger(__name__)

EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
MOMENTUM_SWITCH_ITER = 250
LEARNING_RATE = 200.0
MIN_GAIN = 0.01
ENTROPY_TOL = 1e-5
CALIBRATION_ITERS = 50
P_FLOOR = 1e-12


@dataclass(frozen=True)
class Embedding2D:
    """A 2-D embedding with the KL divergence before and after optimization."""

    points: np.ndarray
    kl_initial: float
    kl_final: float
    seed: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidInput(f"embedding points must be n x 2, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("embedding contains non-finite points")
        if self.kl_final < 0:
            raise InvalidInput("final KL divergence cannot be negative")
        object.__setattr__(self, "points", pts)


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(np.square(x), axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _calibrate_affinities(dists: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic conditional affinities P(j|i) at the target perplexity.

    For each point the Gaussian precision beta is found by binary search so
    the row entropy hits log(perplexity) within ENTROPY_TOL, capped at
    CALIBRATION_ITERS halvings.
    """
    n = dists.shape[0]
    target = np.log(perplexity)
    p = np.zeros((n, n))
    for i in range(n):
        beta, betamin, betamax = 1.0, -np.inf, np.inf
        di = np.delete(dists[i], i)
        for _ in range(CALIBRATION_ITERS):
            expd = np.exp(-di * beta)
            sumd = np.sum(expd)
            if sumd <= 0:
                h = 0.0
                row = np.zeros_like(di)
            else:
                row = expd / sumd
                # H = log(sum) + beta * <d> in nats
                h = np.log(sumd) + beta * np.sum(di * expd) / sumd
            diff = h - target
            if abs(diff) <= ENTROPY_TOL:
                break
            if diff > 0:
                betamin = beta
                beta = beta * 2.0 if betamax == np.inf else (beta + betamax) / 2.0
            else:
                betamax = beta
                beta = beta / 2.0 if betamin == -np.inf else (beta + betamin) / 2.0
        p[i, np.arange(n) != i] = row
    return p


def row_perplexities(features, perplexity: float = 30.0) -> np.ndarray:
    """Calibrated per-point perplexity exp(H_i), for diagnostics and tests."""
    x = _as_matrix(features)
    p = _calibrate_affinities(_pairwise_sq_dists(x), perplexity)
    ps = np.maximum(p, P_FLOOR)
    h = -np.sum(np.where(p > 0, p * np.log(ps), 0.0), axis=1)
    return np.exp(h)


def _kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def _as_matrix(features) -> np.ndarray:
    rows = [np.asarray(getattr(f, "values", f), dtype=np.float64) for f in features]
    x = np.stack(rows, axis=0)
    if not np.all(np.isfinite(x)):
        raise InvalidInput("features contain non-finite values")
    return x


def tsne(features, perplexity: float = 30.0, iters: int = 1000, seed: int = 0) -> Embedding2D:
    """Embed feature vectors into 2-D by exact t-SNE.

    Deterministic given the seed. When n < 3 * perplexity the perplexity is
    lowered to (n - 1) / 3 and the adjustment is logged.
    """
    x = _as_matrix(features)
    n = x.shape[0]
    if n < 5:
        raise InvalidInput(f"t-SNE needs at least 5 points, got {n}")
    if perplexity <= 0:
        raise InvalidInput(f"perplexity must be positive, got {perplexity}")
    if n < 3 * perplexity:
        lowered = (n - 1) / 3.0
        logger.info("lowering perplexity from %g to %g for n=%d", perplexity, lowered, n)
        perplexity = lowered

    cond = _calibrate_affinities(_pairwise_sq_dists(x), perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, P_FLOOR)

    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n, 2)) * 1e-4
    inc = np.zeros_like(y)
    gains = np.ones_like(y)

    def q_of(y_):
        num = 1.0 / (1.0 + _pairwise_sq_dists(y_))
        np.fill_diagonal(num, 0.0)
        return num / np.sum(num), num

    q, _ = q_of(y)
    kl_initial = _kl_divergence(p, np.maximum(q, P_FLOOR))

    for it in range(iters):
        pe = p * EXAGGERATION if it < EXAGGERATION_ITERS else p
        q, num = q_of(y)
        q = np.maximum(q, P_FLOOR)
        # grad_i = 4 * sum_j (p_ij - q_ij) * num_ij * (y_i - y_j)
        pq = (pe - q) * num
        grad = 4.0 * (np.diag(np.sum(pq, axis=1)) - pq) @ y
        momentum = MOMENTUM_EARLY if it < MOMENTUM_SWITCH_ITER else MOMENTUM_LATE
        agree = np.sign(grad) == np.sign(inc)
        gains = np.where(agree, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, MIN_GAIN)
        inc = momentum * inc - LEARNING_RATE * gains * grad
        y = y + inc
        y = y - np.mean(y, axis=0)

    q, _ = q_of(y)
    kl_final = _kl_divergence(p, np.maximum(q, P_FLOOR))
    if kl_final >= kl_initial:
        warnings.warn(
            f"t-SNE failed to reduce KL divergence ({kl_initial:.6f} -> {kl_final:.6f})",
            NumericalWarning,
        )
    return Embedding2D(points=y, kl_initial=kl_initial, kl_final=kl_final, seed=seed)
