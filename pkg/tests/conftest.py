import numpy as np
import pytest

from ddstl.lti import builtin_model, generate_data


@pytest.fixture(scope="session")
def car():
    return builtin_model("car")


@pytest.fixture(scope="session")
def car_data(car):
    return generate_data(car, 200, (-2.0, 2.0), seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
