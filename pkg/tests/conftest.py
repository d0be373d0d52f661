import cmath
import math

import numpy as np
import pytest

from periodic_mfs.geometry import CircleObstacle, FundamentalRegion, sample_region
from periodic_mfs.lattice import make_lattice
from periodic_mfs.mfs import solve_flow

# Period pairs (units of r) of the four benchmark lattices.
LATTICES = {
    "square": (4, 4j),
    "hexagonal": (4, 4 * cmath.exp(1j * math.pi / 3)),
    "rotated": (4 * cmath.exp(1j * math.pi / 6), 4j),
    "skewed": (4, 2 + 2j),
}


def region_for(name, radius=1.0):
    w1, w2 = LATTICES[name]
    return FundamentalRegion(make_lattice(w1 * radius, w2 * radius), CircleObstacle(radius))


@pytest.fixture(scope="session")
def square_region():
    return region_for("square")


@pytest.fixture(scope="session")
def square_samples(square_region):
    return sample_region(square_region, 20_000, seed=3)


@pytest.fixture(scope="session")
def square_model(square_region, square_samples):
    return solve_flow(square_region, 32, 0.7, 1.0, square_samples)


@pytest.fixture(scope="session")
def skewed_model():
    region = region_for("skewed")
    return solve_flow(region, 32, 0.7, 1.0, sample_region(region, 20_000, seed=5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
