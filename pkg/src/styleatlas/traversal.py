"""Latent traversals along attribute directions, and the 5-image severity
progressions built from them.

A traversal walks w_j = base_w - alpha_j * direction with alpha linear over a
closed interval. The subtraction convention is fixed; which end of a walk
looks "more severe" is decided later by how the direction is labeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInput
from .factorization import CATEGORIES, AttributeDirection
from .generator import GeneratedImage, LatentCode, StyleWeights, synthesize

DEFAULT_INTERVAL = (0.0, 50.0)
DEFAULT_STEP = 2.0


@dataclass(frozen=True)
class TraversalSpec:
    """A base code, a direction, and the alpha schedule to walk."""

    base_w: LatentCode
    direction: AttributeDirection
    interval: tuple = DEFAULT_INTERVAL
    step_alpha: float = DEFAULT_STEP
    allow_wide_interval: bool = False

    def __post_init__(self):
        lo, hi = float(self.interval[0]), float(self.interval[1])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InvalidInput("interval endpoints must be finite")
        if hi <= lo:
            raise InvalidInput(f"interval must satisfy B > A, got [{lo}, {hi}]")
        if not (math.isfinite(self.step_alpha) and self.step_alpha > 0):
            raise InvalidInput(f"step_alpha must be positive, got {self.step_alpha}")
        if not self.allow_wide_interval and not (0.0 <= lo and hi <= 50.0):
            raise InvalidInput(
                f"interval [{lo}, {hi}] outside the default [0, 50] policy; "
                "set allow_wide_interval to override"
            )
        if self.base_w.space != "W":
            raise InvalidInput("traversal base code must live in W space")
        if self.base_w.dim != self.direction.vector.shape[0]:
            raise InvalidInput(
                f"base code dimension {self.base_w.dim} does not match direction "
                f"dimension {self.direction.vector.shape[0]}"
            )
        object.__setattr__(self, "interval", (lo, hi))
        object.__setattr__(self, "step_alpha", float(self.step_alpha))


@dataclass(frozen=True)
class ProgressionSequence:
    """An ordered run of images meant to read as increasing severity."""

    id: str
    images: tuple
    alphas: tuple
    direction_id: int
    intended_order: str = "normal_to_severe"

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if len(self.images) != len(alphas):
            raise InvalidInput("images and alphas must have equal length")
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise InvalidInput("alphas must be strictly increasing")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "images", tuple(self.images))

    def __len__(self):
        return len(self.images)


def traversal_alphas(interval, step_alpha: float) -> np.ndarray:
    """alpha_j = A + j*step for j = 0..floor((B-A)/step)."""
    lo, hi = interval
    count = int(math.floor((hi - lo) / step_alpha)) + 1
    return lo + step_alpha * np.arange(count, dtype=np.float64)


def traverse_codes(spec: TraversalSpec) -> list:
    """W-space codes along the walk, first code equal to base_w when A=0."""
    alphas = traversal_alphas(spec.interval, spec.step_alpha)
    base = spec.base_w.values
    direction = spec.direction.vector
    return [LatentCode(base - a * direction, space="W") for a in alphas]


def render_traversal(spec: TraversalSpec, weights: StyleWeights, noise_seed: int | None = None) -> list:
    """Render every code of the walk; images carry direction id and alpha."""
    alphas = traversal_alphas(spec.interval, spec.step_alpha)
    out = []
    for code, alpha in zip(traverse_codes(spec), alphas):
        img = synthesize(code, weights, noise_seed=noise_seed)
        out.append(replace(img, direction_id=spec.direction.rank, alpha=float(alpha)))
    return out


def make_progression(
    base_w: LatentCode,
    direction: AttributeDirection,
    weights: StyleWeights,
    n: int = 5,
    interval=DEFAULT_INTERVAL,
    noise_seed: int | None = None,
    sequence_id: str | None = None,
) -> ProgressionSequence:
    """A severity progression: n renders at equally spaced alphas spanning the
    interval endpoints inclusive, ordered by ascending alpha.
    """
    if n < 2:
        raise InvalidInput(f"a progression needs at least 2 images, got n={n}")
    lo, hi = float(interval[0]), float(interval[1])
    if hi <= lo:
        raise InvalidInput(f"interval must satisfy B > A, got [{lo}, {hi}]")
    alphas = np.linspace(lo, hi, n)
    images = []
    for a in alphas:
        code = LatentCode(base_w.values - a * direction.vector, space="W")
        img = synthesize(code, weights, noise_seed=noise_seed)
        images.append(replace(img, direction_id=direction.rank, alpha=float(a)))
    seq_id = sequence_id if sequence_id is not None else f"dir{direction.rank}_{lo:g}_{hi:g}"
    return ProgressionSequence(
        id=seq_id,
        images=tuple(images),
        alphas=tuple(float(a) for a in alphas),
        direction_id=direction.rank,
    )


def assign_category(direction: AttributeDirection, category: str) -> AttributeDirection:
    """Tagged copy of the direction; re-tagging overwrites."""
    if category not in CATEGORIES:
        raise InvalidInput(f"unknown category {category!r}, expected one of {CATEGORIES}")
    return replace(direction, category=category)
