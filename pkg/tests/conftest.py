import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mriq import phantoms

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def smooth32():
    return phantoms.smooth_phantom(32)


@pytest.fixture(scope="session")
def smooth64():
    return phantoms.smooth_phantom(64)


@pytest.fixture(scope="session")
def step32():
    return phantoms.step_phantom(32)
