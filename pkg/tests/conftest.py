import numpy as np
import pytest

from fwmav.sampling import random_params, random_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def params(rng):
    return random_params(rng)


@pytest.fixture
def state(rng):
    return random_state(rng, vel_scale=2.0)
