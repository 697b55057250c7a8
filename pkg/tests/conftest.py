import numpy as np
import pytest

from carpetlab import new_carpet


@pytest.fixture
def example():
    return new_carpet(3, 2, {(0, 0), (2, 0), (1, 1)})


@pytest.fixture
def full_square():
    return new_carpet(3, 2, [(x, y) for x in range(3) for y in range(2)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
