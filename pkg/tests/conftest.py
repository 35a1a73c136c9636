import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spinsoliton.charge import named_charge, reference_charge
from spinsoliton.grid import make_grid

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ref():
    return reference_charge()


@pytest.fixture(scope="session")
def quartic():
    return named_charge("quartic")


@pytest.fixture(scope="session")
def grid512():
    return make_grid(512, 160)


@pytest.fixture(scope="session")
def grid128():
    return make_grid(128, 40)


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)
