"""Closed-form factorization of the generator's style space.

The dominant variation directions are the top eigenvectors of A^T A, where A
row-stacks the per-layer affine style matrices. No data pass or supervision
is involved; everything is read off the trained weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInput, InvalidLayer
from .generator import StyleWeights
from .jacobi import symmetric_eigh_jacobi

CATEGORIES = ("vascular", "anatomical", "debris", "abnormal")

# Components smaller than this are treated as zero by the sign convention.
_SIGN_EPS = 1e-12


@dataclass(frozen=True)
class AttributeDirection:
    """One unit direction in W space with its variation strength."""

    vector: np.ndarray
    eigenvalue: float
    rank: int
    label: str | None = None
    category: str | None = None
    pathology_relevant: bool | None = None

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1:
            raise InvalidInput(f"direction vector must be 1-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("direction vector contains non-finite entries")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-9:
            raise InvalidInput(f"direction vector must be unit length, got norm {norm}")
        if self.eigenvalue < -1e-9:
            raise InvalidInput(f"eigenvalue must be nonnegative, got {self.eigenvalue}")
        if self.category is not None and self.category not in CATEGORIES:
            raise InvalidInput(f"unknown category {self.category!r}, expected one of {CATEGORIES}")
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "eigenvalue", float(self.eigenvalue))


def stack_affine(weights: StyleWeights, layers=None) -> np.ndarray:
    """Row-stack the affine matrices of the selected layers, L2-normalizing
    each row so wide layers do not dominate the spectrum.

    layers: iterable of layer indices; None selects all synthesis layers.
    """
    if layers is None:
        layers = range(weights.num_layers)
    layers = list(layers)
    if not layers:
        raise InvalidInput("layer selection must be nonempty")
    rows = []
    for l in layers:
        if not 0 <= l < weights.num_layers:
            raise InvalidLayer(f"layer {l} out of range for {weights.num_layers} synthesis layers")
        rows.append(np.asarray(weights.affines[l][0], dtype=np.float64))
    stacked = np.concatenate(rows, axis=0)
    norms = np.linalg.norm(stacked, axis=1, keepdims=True)
    # Zero rows stay zero; they contribute nothing to the Gram matrix.
    safe = np.where(norms > 0.0, norms, 1.0)
    return stacked / safe


def _fix_sign(v: np.ndarray) -> np.ndarray:
    for x in v:
        if abs(x) > _SIGN_EPS:
            return v if x > 0 else -v
    return v


def sefa(a: np.ndarray, j: int) -> list:
    """Top-j variation directions of the stacked affine matrix `a`.

    Eigenvectors of a^T a with the j largest eigenvalues, in descending
    order. Sign convention: the first component larger than 1e-12 in
    magnitude is made positive. Exact eigenvalue ties are ordered
    lexicographically on the (sign-fixed) vector entries.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInput(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix contains non-finite entries")
    d = a.shape[1]
    if not 0 <= j <= d:
        raise InvalidInput(f"j={j} out of range for column count {d}")
    gram = a.T @ a
    eigvals, eigvecs = symmetric_eigh_jacobi(gram)
    pairs = [(max(eigvals[i], 0.0) if eigvals[i] > -1e-9 else eigvals[i], _fix_sign(eigvecs[:, i]))
             for i in range(d)]
    pairs.sort(key=lambda p: (-p[0], tuple(p[1])))
    out = []
    for rank, (lam, vec) in enumerate(pairs[:j]):
        out.append(AttributeDirection(vector=vec / np.linalg.norm(vec), eigenvalue=lam, rank=rank))
    return out


def verify_spectrum(a: np.ndarray, directions, tol: float = 1e-8) -> dict:
    """Self-check that each direction is an eigenpair of a^T a.

    Recomputes ||a v||^2 per direction and compares with the stored
    eigenvalue at relative tolerance `tol`. Never raises; the report carries
    per-direction residuals and a list of failing ranks.
    """
    a = np.asarray(a, dtype=np.float64)
    residuals = []
    failures = []
    for drn in directions:
        measured = float(np.sum(np.square(a @ drn.vector)))
        scale = max(abs(drn.eigenvalue), abs(measured), 1e-300)
        rel = abs(measured - drn.eigenvalue) / scale
        residuals.append({"rank": drn.rank, "eigenvalue": drn.eigenvalue,
                          "measured": measured, "relative_error": rel})
        if rel > tol:
            failures.append(drn.rank)
    return {"ok": not failures, "tolerance": tol, "residuals": residuals, "failures": failures}


def relabel(direction: AttributeDirection, label: str) -> AttributeDirection:
    return replace(direction, label=label)


def directions_to_json(directions) -> str:
    """Serialize directions to the manifest form."""
    records = [
        {
            "rank": d.rank,
            "eigenvalue": d.eigenvalue,
            "vector": [float(x) for x in d.vector],
            "label": d.label,
            "category": d.category,
            "pathology_relevant": d.pathology_relevant,
        }
        for d in directions
    ]
    return json.dumps({"directions": records}, indent=2)


def directions_from_json(text: str) -> list:
    try:
        payload = json.loads(text)
        records = payload["directions"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed direction manifest: {exc}") from exc
    out = []
    for r in records:
        out.append(
            AttributeDirection(
                vector=np.asarray(r["vector"], dtype=np.float64),
                eigenvalue=float(r["eigenvalue"]),
                rank=int(r["rank"]),
                label=r.get("label"),
                category=r.get("category"),
                pathology_relevant=r.get("pathology_relevant"),
            )
        )
    return out
