"""Shared builders for study-layer tests."""

import numpy as np

from styleatlas.study.experiment import Experiment


def tiny_images(n_real=8, n_gen=8, side=4, seed=0):
    """Small named image pools; ids deliberately advertise their provenance
    so leak checks can scan response bodies for them."""
    rng = np.random.default_rng(seed)
    images, provenance, categories = {}, {}, {}
    for i in range(n_real):
        iid = f"real_src_{i}"
        images[iid] = rng.uniform(0, 1, (side, side, 3))
        provenance[iid] = "real"
    cats = ("polyp", "bleeding", "erosion")
    for i in range(n_gen):
        iid = f"generated_src_{i}"
        images[iid] = rng.uniform(0, 1, (side, side, 3))
        provenance[iid] = "generated"
        categories[iid] = cats[i % len(cats)]
    return images, provenance, categories


def make_experiment(seed=3, with_progressions=True, **over):
    images, provenance, categories = tiny_images()
    progressions = []
    if with_progressions:
        ids = sorted(images)
        progressions = [
            {"id": "seqA", "images": ids[:5], "category": "erosion"},
            {"id": "seqB", "images": ids[5:10], "category": "polyp"},
        ]
    kwargs = dict(
        experiment_id="exp-test",
        seed=seed,
        images=images,
        provenance=provenance,
        categories=categories,
        common=sorted(images)[:4],
        min_images=6,
        ranking_count=3,
        progressions=progressions,
    )
    kwargs.update(over)
    return Experiment(**kwargs)
