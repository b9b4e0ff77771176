import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hyperlqr import case1_config
from hyperlqr.runner import build_params, build_weights

settings.register_profile(
    "dev",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=150, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))


@pytest.fixture(scope="session")
def case1():
    return case1_config()


@pytest.fixture(scope="session")
def case1_params(case1):
    return build_params(case1)


@pytest.fixture(scope="session")
def case1_weights(case1):
    return build_weights(case1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
