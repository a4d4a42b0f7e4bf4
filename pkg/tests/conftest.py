import numpy as np
import pytest

from styleatlas import random_weights


@pytest.fixture(scope="session")
def small_weights():
    # 8x8 generator, small enough for exhaustive numeric checks
    return random_weights(latent_dim=8, channels=8, num_layers=2, seed=11)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
