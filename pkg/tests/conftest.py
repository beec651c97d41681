import numpy as np
import pytest

from lsi_certify import build_pipeline, make_potential


@pytest.fixture(scope="session")
def gaussian():
    """Standard normal on [-8, 8] with 1001 nodes."""
    return build_pipeline(make_potential("gaussian", {"scale": 1.0}), 8.0, 1001)


@pytest.fixture(scope="session")
def gaussian_fine():
    return build_pipeline(make_potential("gaussian", {"scale": 1.0}), 8.0, 2001)


@pytest.fixture(scope="session")
def double_well():
    return build_pipeline(make_potential("double_well", {"a4": 0.25, "a2": -0.5}), None, 1001)


@pytest.fixture(scope="session")
def quartic():
    return build_pipeline(make_potential("quartic", {"a4": 0.25}), None, 1001)


@pytest.fixture(scope="session")
def tilted():
    return build_pipeline(make_potential("polynomial", {"a4": 0.25, "a3": 0.2, "a2": -0.5}), None, 1001)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)
