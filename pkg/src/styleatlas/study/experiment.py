"""Experiment definition: image pools, opaque id aliasing, stimulus
construction, and per-session schedules.

Raters only ever see aliased image ids (a seeded hash of the internal id),
so nothing about provenance can leak through file names or id patterns.
Ground truth lives on the server-side Stimulus records and is copied into
the response log at append time.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
from pathlib import Path

import numpy as np

from ..errors import InvalidInput, NotFound
from .models import Stimulus

logger = logging.getLogger(__name__)

DEFAULT_MIN_IMAGES = 50
DEFAULT_RANKING_COUNT = 37
DEFAULT_COMMON_SIZE = 50


def build_ranking_sets(real_pool, gen_pool, count: int = DEFAULT_RANKING_COUNT,
                       seed: int = 0, provenance=None, with_replacement: bool = False):
    """Seeded construction of ranking stimuli, 2 reals + 2 generates each.

    Without replacement (the default) every image is used at most once
    across all sets, so each pool must hold at least 2*count images; setting
    with_replacement allows reuse across sets (never within one) and logs it.
    The 4 ids of each set are shuffled so position encodes nothing.
    """
    real_pool, gen_pool = list(real_pool), list(gen_pool)
    if count < 1:
        raise InvalidInput(f"count must be positive, got {count}")
    if len(set(real_pool)) != len(real_pool) or len(set(gen_pool)) != len(gen_pool):
        raise InvalidInput("image pools must not contain duplicates")
    if set(real_pool) & set(gen_pool):
        raise InvalidInput("an image id appears in both pools")
    rng = np.random.default_rng(seed)
    if with_replacement:
        if len(real_pool) < 2 or len(gen_pool) < 2:
            raise InvalidInput("each pool needs at least 2 images")
        logger.info("building %d ranking sets with replacement", count)
        reals = [list(rng.choice(len(real_pool), size=2, replace=False)) for _ in range(count)]
        gens = [list(rng.choice(len(gen_pool), size=2, replace=False)) for _ in range(count)]
    else:
        if len(real_pool) < 2 * count or len(gen_pool) < 2 * count:
            raise InvalidInput(
                f"{count} sets need {2 * count} images per pool without replacement; "
                f"have {len(real_pool)} real and {len(gen_pool)} generated"
            )
        rperm = rng.permutation(len(real_pool))
        gperm = rng.permutation(len(gen_pool))
        reals = [rperm[2 * i: 2 * i + 2] for i in range(count)]
        gens = [gperm[2 * i: 2 * i + 2] for i in range(count)]

    out = []
    for i in range(count):
        ids = [real_pool[j] for j in reals[i]] + [gen_pool[j] for j in gens[i]]
        truth = {iid: ("real" if k < 2 else "generated") for k, iid in enumerate(ids)}
        order = [ids[j] for j in rng.permutation(4)]
        out.append(Stimulus(id=f"r-{i}", task="ranking",
                            payload={"images": order}, ground_truth=truth))
    return out


class Experiment:
    """A configured study: images, pools, and the three stimulus sets."""

    def __init__(self, experiment_id: str, seed: int, images: dict, provenance: dict,
                 categories: dict | None = None, turing_pool=None, common=None,
                 min_images: int = DEFAULT_MIN_IMAGES, ranking_count: int = DEFAULT_RANKING_COUNT,
                 ranking_with_replacement: bool = False, progressions=()):
        if not images:
            raise InvalidInput("experiment needs at least one image")
        unknown = set(provenance) - set(images)
        if unknown or set(images) - set(provenance):
            raise InvalidInput("provenance must cover exactly the image ids")
        bad = {p for p in provenance.values() if p not in ("real", "generated")}
        if bad:
            raise InvalidInput(f"unknown provenance values {bad}")

        self.id = experiment_id
        self.seed = int(seed)
        self._pixels = {str(k): np.asarray(v, dtype=np.float64) for k, v in images.items()}
        self._provenance = {str(k): v for k, v in provenance.items()}
        self._categories = dict(categories or {})
        self._png_cache = {}

        self._alias = {i: self._alias_of(i) for i in self._pixels}
        if len(set(self._alias.values())) != len(self._alias):
            raise InvalidInput("alias collision; change the experiment seed")
        self._by_alias = {a: i for i, a in self._alias.items()}

        pool = [str(i) for i in (turing_pool if turing_pool is not None else sorted(self._pixels))]
        missing = [i for i in pool if i not in self._pixels]
        if missing:
            raise InvalidInput(f"turing pool references unknown images {missing}")
        rng = np.random.default_rng(self.seed)
        if common is None:
            size = min(DEFAULT_COMMON_SIZE, len(pool))
            common = [pool[j] for j in rng.choice(len(pool), size=size, replace=False)]
        common = [str(i) for i in common]
        if not set(common) <= set(pool):
            raise InvalidInput("common subset must be drawn from the turing pool")
        self.turing_pool = pool
        self.common = common
        self.min_images = min(int(min_images), len(pool))
        if self.min_images < min_images:
            logger.info("min_images clamped to pool size %d", self.min_images)

        reals = [i for i in sorted(self._pixels) if self._provenance[i] == "real"]
        gens = [i for i in sorted(self._pixels) if self._provenance[i] == "generated"]
        self.ranking_sets = build_ranking_sets(
            [self._alias[i] for i in reals], [self._alias[i] for i in gens],
            count=ranking_count, seed=self.seed + 1,
            with_replacement=ranking_with_replacement,
        )

        self.progression_stimuli = []
        for p in progressions:
            ids = [str(i) for i in p["images"]]
            missing = [i for i in ids if i not in self._pixels]
            if missing:
                raise InvalidInput(f"progression {p.get('id')} references unknown images {missing}")
            self.progression_stimuli.append(Stimulus(
                id=f"p-{p['id']}", task="progression",
                payload={"sequence": str(p["id"]), "images": [self._alias[i] for i in ids]},
                ground_truth={"sequence": str(p["id"]), "source_ids": ids,
                              "category": p.get("category"),
                              "intended_order": "normal_to_severe"},
            ))

        self.turing_stimuli = {}
        for i in pool:
            a = self._alias[i]
            self.turing_stimuli[a] = Stimulus(
                id=f"t-{a}", task="turing", payload={"image": a},
                ground_truth={"image": a, "provenance": self._provenance[i],
                              "source_id": i, "category": self._categories.get(i)},
            )

        self._stimuli_by_id = {s.id: s for s in self.all_stimuli()}

    def _alias_of(self, image_id: str) -> str:
        digest = hashlib.sha256(f"{self.id}|{self.seed}|{image_id}".encode()).hexdigest()
        return digest[:16]

    def all_stimuli(self):
        yield from self.turing_stimuli.values()
        yield from self.ranking_sets
        yield from self.progression_stimuli

    def stimulus(self, stimulus_id: str) -> Stimulus:
        try:
            return self._stimuli_by_id[stimulus_id]
        except KeyError:
            raise NotFound(f"unknown stimulus {stimulus_id!r}") from None

    def alias(self, image_id: str) -> str:
        return self._alias[str(image_id)]

    def png_bytes(self, alias: str) -> bytes:
        """Encoded PNG for an aliased image id."""
        if alias in self._png_cache:
            return self._png_cache[alias]
        if alias not in self._by_alias:
            raise NotFound(f"unknown image {alias!r}")
        from PIL import Image

        pixels = self._pixels[self._by_alias[alias]]
        arr = np.clip(np.round(pixels * 255.0), 0, 255).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
        self._png_cache[alias] = buf.getvalue()
        return self._png_cache[alias]

    def schedule(self, task: str, schedule_seed: int):
        """Deterministic per-session stimulus order.

        Turing schedules put the common subset (shuffled) first so everyone
        who answers at least min_images covers it; the remainder follows in
        its own shuffled order. Ranking and progression schedules shuffle
        the full fixed set.
        """
        rng = np.random.default_rng(schedule_seed)
        if task == "turing":
            common = list(self.common)
            rest = [i for i in self.turing_pool if i not in set(self.common)]
            ordered = [common[j] for j in rng.permutation(len(common))]
            ordered += [rest[j] for j in rng.permutation(len(rest))] if rest else []
            return [self.turing_stimuli[self._alias[i]] for i in ordered]
        if task == "ranking":
            return [self.ranking_sets[j] for j in rng.permutation(len(self.ranking_sets))]
        if task == "progression":
            if not self.progression_stimuli:
                raise InvalidInput("experiment defines no progression sequences")
            return [self.progression_stimuli[j]
                    for j in rng.permutation(len(self.progression_stimuli))]
        raise InvalidInput(f"unknown task {task!r}")

    @property
    def config_hash(self) -> str:
        basis = {
            "experiment_id": self.id,
            "seed": self.seed,
            "images": sorted(self._pixels),
            "provenance": self._provenance,
            "turing_pool": self.turing_pool,
            "common": self.common,
            "min_images": self.min_images,
            "ranking_count": len(self.ranking_sets),
            "progressions": [s.id for s in self.progression_stimuli],
        }
        return hashlib.sha256(json.dumps(basis, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_config(cls, config_path) -> "Experiment":
        """Load an experiment from a JSON config plus an image directory."""
        path = Path(config_path)
        with open(path) as fh:
            cfg = json.load(fh)
        from PIL import Image

        base = path.parent / cfg.get("images_dir", ".")
        images, provenance, categories = {}, {}, {}
        for entry in cfg["images"]:
            iid = str(entry["id"])
            with Image.open(base / entry["file"]) as im:
                images[iid] = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
            provenance[iid] = entry["provenance"]
            if entry.get("category"):
                categories[iid] = entry["category"]
        turing = cfg.get("turing", {})
        ranking = cfg.get("ranking", {})
        return cls(
            experiment_id=str(cfg["experiment_id"]),
            seed=int(cfg.get("seed", 0)),
            images=images,
            provenance=provenance,
            categories=categories,
            turing_pool=turing.get("pool"),
            common=turing.get("common"),
            min_images=turing.get("min_images", DEFAULT_MIN_IMAGES),
            ranking_count=ranking.get("count", DEFAULT_RANKING_COUNT),
            ranking_with_replacement=ranking.get("with_replacement", False),
            progressions=cfg.get("progressions", ()),
        )
