import numpy as np
import pytest

from contrastcpd.schemas.discriminators import OptimizerSettings, parse_family


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quick_poly():
    """poly:1 for loop-level tests; solved by Newton, so the epoch budget is unused."""
    return parse_family("poly:1", optimizer=OptimizerSettings(epochs=15, learning_rate=0.1))


@pytest.fixture
def quick_mlp():
    return parse_family("mlp:1,2,3,1", optimizer=OptimizerSettings(epochs=10, learning_rate=0.1))
