import numpy as np
import pytest

from gibbslab.geometry import ORIGIN, DiskPoint
from gibbslab.groups import build_octagon, build_schottky
from gibbslab.orbits import enumerate_orbit
from gibbslab.potential import BumpSumPotential


@pytest.fixture(scope="session")
def octagon():
    return build_octagon()


@pytest.fixture(scope="session")
def schottky():
    return build_schottky(2, 4.0, [0.0, np.pi / 2])


@pytest.fixture(scope="session")
def bump(octagon):
    return BumpSumPotential(octagon, 1.0, 0.3 * octagon.systole_bound(), DiskPoint(0.2, 0.1))


@pytest.fixture(scope="session")
def table8(octagon):
    return enumerate_orbit(octagon, ORIGIN, ORIGIN, 8.0)


@pytest.fixture(scope="session")
def table10(octagon):
    return enumerate_orbit(octagon, ORIGIN, ORIGIN, 10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)
