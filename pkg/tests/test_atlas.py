import json

import numpy as np
import pytest

from styleatlas.atlas import (
    AtlasConfig,
    FeatureVector,
    PrototypeSet,
    build_atlas,
    extract_features,
    group_for,
    label_attributes,
    label_from_embedding,
    load_manifest,
)
from styleatlas.errors import InvalidInput
from styleatlas.factorization import AttributeDirection, sefa, stack_affine
from styleatlas.generator import GeneratedImage
from styleatlas.tsne import Embedding2D


def test_feature_vector_validation():
    with pytest.raises(InvalidInput):
        FeatureVector(np.zeros((2, 2)))
    with pytest.raises(InvalidInput):
        FeatureVector(np.array([1.0, float("nan")]))
    assert FeatureVector(np.zeros(5)).dim == 5


def test_prototype_set_rejects_duplicates():
    with pytest.raises(InvalidInput):
        PrototypeSet(items=(("p1", "polyp"), ("p1", "bleeding")))
    ps = PrototypeSet(items=(("p1", "polyp"), ("p2", "bleeding")))
    assert ps.ids == ("p1", "p2")
    assert len(ps) == 2


def test_extract_features_constant_image():
    img = np.full((16, 16, 3), 0.4)
    f = extract_features(img)
    assert f.dim == 70
    assert np.allclose(f.values[:64], 0.4)  # 8x8 grayscale blocks
    assert np.allclose(f.values[64:67], 0.4)  # channel means
    assert np.allclose(f.values[67:], 0.0)  # channel stds
    with pytest.raises(InvalidInput):
        extract_features(np.zeros((4, 4)))


def test_extract_features_block_average(rng):
    img = rng.uniform(0, 1, (16, 16, 3))
    f = extract_features(img)
    gray = img.mean(axis=2)
    assert abs(f.values[0] - gray[:2, :2].mean()) < 1e-12
    assert abs(f.values[63] - gray[14:, 14:].mean()) < 1e-12
    # odd sides fall back to nearest sampling but keep the dimension
    assert extract_features(rng.uniform(0, 1, (10, 10, 3))).dim == 70


def test_label_from_embedding_neighborhoods():
    # prototypes at the origin, direction 0 close by, direction 1 far away
    points = np.array([
        [0.0, 0.0],            # prototype
        [0.1, 0.0], [0.0, 0.1],  # direction 0
        [50.0, 50.0], [51.0, 50.0],  # direction 1
    ])
    ids = [None, 0, 0, 1, 1]
    assert label_from_embedding(points, ids, [0], k=2) == {0}
    bigger = label_from_embedding(points, ids, [0], k=4)
    assert bigger == {0, 1}
    assert label_from_embedding(points, ids, [0], k=2) <= bigger
    with pytest.raises(InvalidInput):
        label_from_embedding(points, ids, [0], k=0)
    with pytest.raises(InvalidInput):
        label_from_embedding(points, ids, [], k=2)


def test_label_from_embedding_prototype_not_own_neighbor():
    points = np.array([[0.0, 0.0], [0.05, 0.0], [9.0, 9.0]])
    ids = [None, None, 3]
    # the only non-prototype point is far away but still the sole candidate
    assert label_from_embedding(points, ids, [0, 1], k=2) == {3}


def _direction(rank, label=None, category=None, flagged=False):
    v = np.zeros(6)
    v[rank % 6] = 1.0
    return AttributeDirection(rank=rank, vector=v, eigenvalue=float(6 - rank),
                              label=label, category=category,
                              pathology_relevant=flagged)


def test_label_attributes_flags_nearby_direction(rng):
    bright = np.clip(rng.uniform(0.8, 1.0, (8, 8, 3)), 0, 1)
    dark = np.clip(rng.uniform(0.0, 0.2, (8, 8, 3)), 0, 1)
    traversals = []
    for _ in range(6):
        traversals.append(GeneratedImage(
            pixels=np.clip(bright + rng.normal(0, 0.01, bright.shape), 0, 1),
            direction_id=0))
        traversals.append(GeneratedImage(
            pixels=np.clip(dark + rng.normal(0, 0.01, dark.shape), 0, 1),
            direction_id=1))
    protos = PrototypeSet(items=(("p1", "polyp"),))
    proto_img = {"p1": GeneratedImage(
        pixels=np.clip(bright + rng.normal(0, 0.01, bright.shape), 0, 1))}
    dirs = [_direction(0), _direction(1)]
    labeled, emb = label_attributes(dirs, traversals, protos, proto_img,
                                    k=3, perplexity=3.0, iters=700, seed=0)
    assert isinstance(emb, Embedding2D)
    assert [d.pathology_relevant for d in labeled] == [True, False]
    assert labeled[0] is not dirs[0]  # fresh records, inputs untouched
    assert dirs[0].pathology_relevant is False


def test_label_attributes_validation(rng):
    img = GeneratedImage(pixels=rng.uniform(0, 1, (8, 8, 3)), direction_id=0)
    anon = GeneratedImage(pixels=rng.uniform(0, 1, (8, 8, 3)))
    protos = PrototypeSet(items=(("p1", "polyp"),))
    with pytest.raises(InvalidInput):
        label_attributes([], [img], protos, {}, k=1)
    with pytest.raises(InvalidInput):
        label_attributes([], [anon], protos, {"p1": anon}, k=1)
    with pytest.raises(InvalidInput):
        label_attributes([], [img], PrototypeSet(items=()), {"p1": anon}, k=1)


def test_group_for_keywords_beat_category():
    assert group_for(_direction(0, label="camera rotation", category="vascular")) \
        == "view_rotation"
    assert group_for(_direction(1, label="lighting shift")) == "modality"
    assert group_for(_direction(2, category="debris")) == "debris"
    assert group_for(_direction(3)) is None


def test_build_atlas_writes_grid(tmp_path, small_weights):
    import dataclasses

    dirs = sefa(stack_affine(small_weights), j=2)
    dirs = [
        dataclasses.replace(dirs[0], label="vessel contrast", category="vascular"),
        dirs[1],
    ]
    config = AtlasConfig(out_dir=str(tmp_path / "atlas"), interval=(0.0, 40.0),
                         images_per_direction=5, base_seed=1)
    manifest = build_atlas(dirs, small_weights, config)
    files = sorted(p.name for p in (tmp_path / "atlas").glob("*.png"))
    assert len(files) == 10
    assert "dir0_a0.png" in files and "dir0_a40.png" in files
    assert manifest["directions"][0]["alphas"] == [0.0, 10.0, 20.0, 30.0, 40.0]
    assert manifest["groups"]["vascular"] == [0]
    assert manifest["unassigned"] == [1]
    assert manifest["embedding"] is None
    assert load_manifest(tmp_path / "atlas" / "atlas.json") == manifest


def test_build_atlas_deterministic(tmp_path, small_weights):
    dirs = sefa(stack_affine(small_weights), j=1)
    cfg_a = AtlasConfig(out_dir=str(tmp_path / "a"), base_seed=5)
    cfg_b = AtlasConfig(out_dir=str(tmp_path / "b"), base_seed=5)
    ma = build_atlas(dirs, small_weights, cfg_a)
    mb = build_atlas(dirs, small_weights, cfg_b)
    assert ma == mb
    for name in ma["directions"][0]["files"]:
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_build_atlas_embedding_included(tmp_path, small_weights):
    dirs = sefa(stack_affine(small_weights), j=2)
    config = AtlasConfig(out_dir=str(tmp_path / "atlas"), images_per_direction=5,
                         include_embedding=True, embed_seed=3)
    manifest = build_atlas(dirs, small_weights, config)
    emb = manifest["embedding"]
    assert emb is not None
    assert len(emb["points"]) == 10
    assert emb["kl_final"] <= emb["kl_initial"]
