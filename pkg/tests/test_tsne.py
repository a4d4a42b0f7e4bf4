import numpy as np
import pytest

import styleatlas as sa
from styleatlas.tsne import row_perplexities


def _three_clusters(n_per=20, dim=10, sep=20.0, seed=0):
    rng = np.random.default_rng(seed)
    centers = [np.zeros(dim)]
    c2 = np.zeros(dim)
    c2[0] = sep
    c3 = np.zeros(dim)
    c3[1] = sep
    centers += [c2, c3]
    pts, labels = [], []
    for k, c in enumerate(centers):
        pts.append(rng.normal(0, 1.0, (n_per, dim)) + c)
        labels += [k] * n_per
    return np.concatenate(pts), np.array(labels)


def _separation_ratio(points, labels):
    cents = np.stack([points[labels == k].mean(axis=0) for k in range(3)])
    inter = min(
        np.linalg.norm(cents[a] - cents[b])
        for a in range(3)
        for b in range(a + 1, 3)
    )
    intra = max(
        np.sqrt(np.mean(np.sum((points[labels == k] - cents[k]) ** 2, axis=1)))
        for k in range(3)
    )
    return inter / intra


def test_three_clusters_separate():
    x, labels = _three_clusters()
    emb = sa.tsne(x, perplexity=15, iters=500, seed=0)
    assert _separation_ratio(emb.points, labels) > 3.0
    assert emb.kl_final < emb.kl_initial


def test_deterministic_per_seed():
    x, _ = _three_clusters(n_per=8)
    a = sa.tsne(x, perplexity=5, iters=120, seed=3)
    b = sa.tsne(x, perplexity=5, iters=120, seed=3)
    c = sa.tsne(x, perplexity=5, iters=120, seed=4)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    assert a.kl_final == b.kl_final


def test_perplexity_calibration_hits_target():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(40, 6))
    perp = row_perplexities(x, perplexity=12.0)
    assert np.allclose(perp, 12.0, rtol=2e-4)


def test_minimum_points():
    with pytest.raises(sa.InvalidInput):
        sa.tsne(np.zeros((4, 3)), perplexity=2)


def test_perplexity_auto_lowered(caplog):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(9, 4))
    import logging

    with caplog.at_level(logging.INFO, logger="styleatlas.tsne"):
        emb = sa.tsne(x, perplexity=30, iters=50, seed=0)
    assert any("lowering perplexity" in r.message for r in caplog.records)
    assert emb.points.shape == (9, 2)


def test_invalid_perplexity():
    with pytest.raises(sa.InvalidInput):
        sa.tsne(np.zeros((10, 3)), perplexity=0)


def test_embedding_is_centered():
    x, _ = _three_clusters(n_per=6)
    emb = sa.tsne(x, perplexity=4, iters=80, seed=1)
    assert np.allclose(emb.points.mean(axis=0), 0.0, atol=1e-9)


def test_embedding2d_validation():
    with pytest.raises(sa.InvalidInput):
        sa.Embedding2D(points=np.zeros((3, 3)), kl_initial=1.0, kl_final=0.5, seed=0)
    with pytest.raises(sa.InvalidInput):
        sa.Embedding2D(points=np.zeros((3, 2)), kl_initial=1.0, kl_final=-0.5, seed=0)


def test_accepts_feature_vector_objects(small_weights):
    # FeatureVector wrappers and raw arrays embed identically
    import styleatlas.atlas as atlas_mod

    rng = np.random.default_rng(0)
    imgs = [
        sa.GeneratedImage(pixels=rng.uniform(0, 1, (8, 8, 3))) for _ in range(12)
    ]
    feats = [atlas_mod.extract_features(i) for i in imgs]
    raw = [f.values for f in feats]
    a = sa.tsne(feats, perplexity=3, iters=60, seed=5)
    b = sa.tsne(raw, perplexity=3, iters=60, seed=5)
    assert np.array_equal(a.points, b.points)
