import numpy as np
import pytest

from hsewald import generate_system


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session", params=["stokeslet", "stresslet", "rotlet"])
def kernel(request):
    return request.param


@pytest.fixture(scope="session")
def small_half_system(kernel):
    return generate_system(40, 2.0, kernel, "half", seed=3)


@pytest.fixture(scope="session")
def small_free_system(kernel):
    return generate_system(40, 2.0, kernel, "free", seed=3)
