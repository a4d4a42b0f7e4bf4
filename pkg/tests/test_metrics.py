import numpy as np
import pytest

import styleatlas as sa
from styleatlas.errors import NumericalFailure
from styleatlas.metrics import EXTRACTOR_ID, GaussianSummary

from oracles import frechet_scipy


def _spd(rng, d):
    m = rng.normal(size=(d, d))
    return m @ m.T + d * np.eye(d) * 0.1


def test_extractor_dimension(rng):
    img = sa.GeneratedImage(pixels=rng.uniform(0, 1, (8, 8, 3)))
    f = sa.extract_features(img)
    assert f.values.shape == (70,)
    assert EXTRACTOR_ID == "shallow-70d"


def test_extractor_handles_non_multiple_of_grid(rng):
    img = sa.GeneratedImage(pixels=rng.uniform(0, 1, (12, 12, 3)))
    assert sa.extract_features(img).values.shape == (70,)


def test_fit_gaussian_unbiased(rng):
    x = rng.normal(size=(40, 5))
    g = sa.fit_gaussian(x)
    assert np.allclose(g.mu, x.mean(axis=0))
    assert np.allclose(g.sigma, np.cov(x, rowvar=False))  # np.cov is n-1 too
    with pytest.raises(sa.InvalidInput):
        sa.fit_gaussian(x[:1])


def test_identity_distance_is_zero(rng):
    g = GaussianSummary(mu=rng.normal(size=6), sigma=_spd(rng, 6))
    assert sa.frechet_distance(g, g) <= 1e-10


def test_mean_shift_closed_form(rng):
    sigma = _spd(rng, 5)
    mu = rng.normal(size=5)
    v = rng.normal(size=5)
    g1 = GaussianSummary(mu=mu, sigma=sigma)
    g2 = GaussianSummary(mu=mu + v, sigma=sigma)
    assert abs(sa.frechet_distance(g1, g2) - float(v @ v)) < 1e-10


def test_symmetry_on_random_spd_pairs(rng):
    for _ in range(50):
        d = int(rng.integers(2, 8))
        g1 = GaussianSummary(mu=rng.normal(size=d), sigma=_spd(rng, d))
        g2 = GaussianSummary(mu=rng.normal(size=d), sigma=_spd(rng, d))
        a = sa.frechet_distance(g1, g2)
        b = sa.frechet_distance(g2, g1)
        assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


def test_matches_scipy_oracle(rng):
    for _ in range(25):
        d = int(rng.integers(2, 10))
        mu1, mu2 = rng.normal(size=d), rng.normal(size=d)
        s1, s2 = _spd(rng, d), _spd(rng, d)
        ours = sa.frechet_distance(GaussianSummary(mu1, s1), GaussianSummary(mu2, s2))
        ref = frechet_scipy(mu1, s1, mu2, s2)
        assert abs(ours - ref) <= 1e-8 * max(1.0, abs(ref))


def test_monotone_in_mean_separation(rng):
    sigma = _spd(rng, 4)
    g0 = GaussianSummary(mu=np.zeros(4), sigma=sigma)
    dists = [
        sa.frechet_distance(g0, GaussianSummary(mu=np.full(4, t), sigma=sigma))
        for t in (0.0, 0.5, 1.0, 2.0)
    ]
    assert dists == sorted(dists)


def test_large_negative_eigenvalue_raises():
    bad = np.diag([1.0, -0.5])
    with pytest.raises(NumericalFailure):
        sa.frechet_distance(
            GaussianSummary(mu=np.zeros(2), sigma=bad),
            GaussianSummary(mu=np.zeros(2), sigma=np.eye(2)),
        )


def test_dimension_mismatch():
    with pytest.raises(sa.InvalidDimension):
        sa.frechet_distance(
            GaussianSummary(mu=np.zeros(2), sigma=np.eye(2)),
            GaussianSummary(mu=np.zeros(3), sigma=np.eye(3)),
        )


def test_fd_from_feature_sets_nonneg(rng):
    a = rng.normal(size=(30, 7))
    b = rng.normal(size=(30, 7)) + 1.0
    assert sa.fd_from_feature_sets(a, b) > 0
    assert sa.fd_from_feature_sets(a, a) <= 1e-10


def test_select_checkpoint_prefers_matching_distribution(small_weights, rng):
    # checkpoint whose samples match the reference has the lowest score
    from styleatlas.metrics import sample_images

    ref = sample_images(small_weights, 60, seed=5)
    other = sa.random_weights(latent_dim=8, channels=8, num_layers=2, seed=99)
    best, scores = sa.select_checkpoint([other, small_weights], ref, gen_count=60, seed=6)
    assert best == 1
    assert len(scores) == 2
    assert scores[1] < scores[0]


def test_select_checkpoint_tie_goes_earliest(small_weights):
    from styleatlas.metrics import sample_images

    ref = sample_images(small_weights, 40, seed=2)
    best, scores = sa.select_checkpoint(
        [small_weights, small_weights], ref, gen_count=40, seed=3
    )
    assert best == 0
    assert scores[0] == scores[1]


def test_gaussian_summary_validation(rng):
    with pytest.raises(sa.InvalidInput):
        GaussianSummary(mu=np.zeros(3), sigma=np.triu(np.ones((3, 3))))
    with pytest.raises(sa.InvalidDimension):
        GaussianSummary(mu=np.zeros(3), sigma=np.eye(4))
