"""Image featurization, embedding-based labeling of attribute directions,
and the exported image atlas.

Features are shallow image statistics (downsampled grayscale plus channel
moments), enough to separate the toy generator's variation modes without any
pretrained network. Directions whose traversal images land near designated
prototype images in the 2-D embedding get flagged pathology-relevant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .factorization import AttributeDirection
from .generator import LatentCode, StyleWeights, map_latent
from .traversal import make_progression
from .tsne import tsne

GRID = 8  # downsample target; 8x8 gray + 3 means + 3 stds = 70 dims
ATLAS_GROUPS = ("vascular", "abnormal", "debris", "view_rotation", "anatomical", "modality")

_VIEW_WORDS = ("view", "rotation", "rotate", "zoom", "angle")
_MODALITY_WORDS = ("modality", "lighting", "illumination", "color", "exposure")


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length shallow feature of one image."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise InvalidInput(f"feature vector must be 1-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("feature vector contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PrototypeSet:
    """Image ids designated prototypical, each with its pathology tag."""

    items: tuple  # of (image_id, tag) pairs

    def __post_init__(self):
        items = tuple((str(i), str(t)) for i, t in self.items)
        if len({i for i, _ in items}) != len(items):
            raise InvalidInput("prototype ids must be unique")
        object.__setattr__(self, "items", items)

    @property
    def ids(self):
        return tuple(i for i, _ in self.items)

    def __len__(self):
        return len(self.items)


def extract_features(image) -> FeatureVector:
    """Deterministic shallow features of an image.

    Grayscale (channel mean) block-averaged to 8x8 when the side is a
    multiple of 8, nearest-upsampled otherwise, concatenated with per-channel
    mean and population std.
    """
    pixels = np.asarray(getattr(image, "pixels", image), dtype=np.float64)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise InvalidInput(f"expected an HxWx3 image, got shape {pixels.shape}")
    side = pixels.shape[0]
    gray = pixels.mean(axis=2)
    if side % GRID == 0:
        f = side // GRID
        block = gray.reshape(GRID, f, GRID, f).mean(axis=(1, 3))
    else:
        idx = np.minimum((np.arange(GRID) * side) // GRID, side - 1)
        block = gray[np.ix_(idx, idx)]
    means = pixels.mean(axis=(0, 1))
    stds = pixels.std(axis=(0, 1))
    return FeatureVector(np.concatenate([block.ravel(), means, stds]))


def label_from_embedding(points: np.ndarray, direction_ids, prototype_indices, k: int):
    """Direction ranks with at least one image among the k nearest embedded
    neighbors of any prototype.

    points: n x 2 embedding. direction_ids: per point, the owning direction
    rank or None for prototype points. prototype_indices: row indices of the
    prototypes. Monotone in k by construction.
    """
    pts = np.asarray(points, dtype=np.float64)
    if k < 1:
        raise InvalidInput(f"k must be at least 1, got {k}")
    if not prototype_indices:
        raise InvalidInput("prototype set is empty")
    flagged = set()
    for p in prototype_indices:
        d = np.linalg.norm(pts - pts[p], axis=1)
        d[p] = np.inf  # a prototype is not its own neighbor
        order = np.argsort(d, kind="stable")[: min(k, len(d) - 1)]
        for idx in order:
            if direction_ids[idx] is not None:
                flagged.add(direction_ids[idx])
    return flagged


def label_attributes(
    directions,
    traversal_images,
    prototypes: PrototypeSet,
    prototype_images,
    k: int = 10,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int = 0,
):
    """Label each direction pathology_relevant by embedding proximity.

    traversal_images: GeneratedImage list, each carrying its direction_id.
    prototype_images: mapping from prototype id to image. The embedding is
    built jointly over both sets; a direction is flagged true when any of its
    images falls among the k nearest neighbors of any prototype, false
    otherwise. Returns (labeled directions, Embedding2D).
    """
    if len(prototypes) == 0:
        raise InvalidInput("prototype set is empty")
    missing = [i for i in prototypes.ids if i not in prototype_images]
    if missing:
        raise InvalidInput(f"missing prototype images for ids {missing}")
    for img in traversal_images:
        if img.direction_id is None:
            raise InvalidInput("traversal images must carry a direction_id")

    feats = [extract_features(img) for img in traversal_images]
    owner = [img.direction_id for img in traversal_images]
    proto_rows = []
    for pid in prototypes.ids:
        feats.append(extract_features(prototype_images[pid]))
        owner.append(None)
        proto_rows.append(len(feats) - 1)

    embedding = tsne(feats, perplexity=perplexity, iters=iters, seed=seed)
    flagged = label_from_embedding(embedding.points, owner, proto_rows, k)
    labeled = [replace(d, pathology_relevant=d.rank in flagged) for d in directions]
    return labeled, embedding


def group_for(direction: AttributeDirection) -> str | None:
    """Atlas display group for a direction, from its label and category.

    Label keywords take precedence (view/rotation and modality have no
    category of their own); otherwise the stored category maps through
    directly. Unlabeled, uncategorized directions return None.
    """
    text = (direction.label or "").lower()
    if any(w in text for w in _VIEW_WORDS):
        return "view_rotation"
    if any(w in text for w in _MODALITY_WORDS):
        return "modality"
    return direction.category


@dataclass(frozen=True)
class AtlasConfig:
    out_dir: str
    interval: tuple = (0.0, 40.0)
    images_per_direction: int = 5
    base_seed: int = 0
    noise_seed: int | None = None
    psi: float = 1.0
    include_embedding: bool = False
    embed_seed: int = 0


def _write_png(path: Path, pixels: np.ndarray) -> None:
    from PIL import Image

    arr = np.clip(np.round(pixels * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def build_atlas(directions, weights: StyleWeights, config: AtlasConfig):
    """Render a traversal strip per direction and write the atlas.

    Writes PNGs named dir{rank}_a{alpha}.png plus atlas.json into
    config.out_dir; returns the manifest dict. Deterministic given the config
    seeds.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.base_seed)
    z = LatentCode(rng.standard_normal(weights.latent_dim), space="Z")
    base_w = map_latent(z, weights, psi=config.psi)

    records = []
    groups = {g: [] for g in ATLAS_GROUPS}
    unassigned = []
    all_images = []
    for d in directions:
        seq = make_progression(
            base_w,
            d,
            weights,
            n=config.images_per_direction,
            interval=config.interval,
            noise_seed=config.noise_seed,
        )
        files = []
        for img, alpha in zip(seq.images, seq.alphas):
            name = f"dir{d.rank}_a{alpha:g}.png"
            _write_png(out / name, img.pixels)
            files.append(name)
            all_images.append(img)
        records.append(
            {
                "rank": d.rank,
                "eigenvalue": d.eigenvalue,
                "label": d.label,
                "category": d.category,
                "pathology_relevant": d.pathology_relevant,
                "alphas": list(seq.alphas),
                "files": files,
            }
        )
        g = group_for(d)
        if g is None:
            unassigned.append(d.rank)
        else:
            groups[g].append(d.rank)

    manifest = {
        "base_seed": config.base_seed,
        "interval": list(config.interval),
        "directions": records,
        "groups": groups,
        "unassigned": unassigned,
        "prototypes": [],
        "embedding": None,
    }
    if config.include_embedding and len(all_images) >= 5:
        emb = tsne([extract_features(i) for i in all_images], seed=config.embed_seed)
        manifest["embedding"] = {
            "points": [[float(a), float(b)] for a, b in emb.points],
            "kl_initial": emb.kl_initial,
            "kl_final": emb.kl_final,
            "seed": emb.seed,
        }
    with open(out / "atlas.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def load_manifest(path) -> dict:
    with open(Path(path)) as fh:
        return json.load(fh)
