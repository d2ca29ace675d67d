import numpy as np
import pytest

from qps.potential import potential_preset

GOLDEN = 0.6180339887498949


@pytest.fixture(scope="session")
def cos_pot():
    return potential_preset("cos")


@pytest.fixture(scope="session")
def twowave_pot():
    return potential_preset("two-wave")


@pytest.fixture(scope="session")
def zero_pot():
    return potential_preset("coscoeff", [])


def rng(seed):
    return np.random.Generator(np.random.Philox(key=seed))
