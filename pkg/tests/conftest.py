import pytest

from tentlablib.lattice import build_lattice
from tentlablib.measures import PointMasses, WeightedVolume


@pytest.fixture
def seed():
    return 20240117


@pytest.fixture(scope="session")
def small_lattice():
    return build_lattice(1, 0.5, 2.0, seed=7, samples=2000)


@pytest.fixture
def zero_measure():
    return PointMasses.zero(1)


@pytest.fixture
def volume():
    return WeightedVolume(0.0, 1)
