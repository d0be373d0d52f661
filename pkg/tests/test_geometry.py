import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from periodic_mfs import geometry
from periodic_mfs.geometry import (
    BLOCK_SIZE,
    CircleObstacle,
    FundamentalRegion,
    GeometryError,
    area_D0,
    center_distance,
    grid_samples,
    in_obstacle_array,
    nearest_translate,
    sample_blocks,
    sample_region,
    shortest_lattice_vector,
)
from periodic_mfs.lattice import make_lattice

from conftest import LATTICES, region_for


def in_parallelogram(z, region):
    a, b = region.lattice.coordinates(z - region.z0)
    return (a >= 0) & (a <= 1) & (b >= 0) & (b <= 1)


def test_area_examples():
    assert area_D0(region_for("square")) == pytest.approx(16 - math.pi)
    assert area_D0(region_for("square")) == pytest.approx(12.8584, abs=1e-4)
    assert area_D0(region_for("hexagonal")) == pytest.approx(8 * math.sqrt(3) - math.pi, rel=1e-14)
    assert area_D0(region_for("hexagonal")) == pytest.approx(10.71481, abs=1e-5)


def test_area_scales_with_radius():
    assert area_D0(region_for("skewed", radius=0.5)) == pytest.approx(0.25 * area_D0(region_for("skewed")))


def test_overlapping_obstacles_rejected():
    with pytest.raises(GeometryError, match="overlap"):
        FundamentalRegion(make_lattice(4, 4j), CircleObstacle(2.5))
    with pytest.raises(GeometryError, match="overlap"):
        # shortest vector of (4, 2+2i) is |2+2i| = 2.83
        FundamentalRegion(make_lattice(4, 2 + 2j), CircleObstacle(1.5))


def test_bad_radius_and_anchor():
    with pytest.raises(GeometryError):
        CircleObstacle(0.0)
    with pytest.raises(GeometryError, match="z0"):
        FundamentalRegion(make_lattice(4, 4j), CircleObstacle(1.0), z0=1.0)
    region = FundamentalRegion(make_lattice(4, 4j), CircleObstacle(1.0, 0.5j), z0=0.2 + 0.6j)
    assert region.z0 == 0.2 + 0.6j


@pytest.mark.parametrize("name", list(LATTICES))
def test_shortest_vector_brute_force(name):
    lat = region_for(name).lattice
    m, n = np.meshgrid(np.arange(-6, 7), np.arange(-6, 7))
    lengths = np.abs(m * lat.omega1 + n * lat.omega2)
    lengths[(m == 0) & (n == 0)] = np.inf
    assert shortest_lattice_vector(lat) == pytest.approx(lengths.min())


def test_membership_examples():
    region = region_for("square")
    lat = region.lattice
    assert in_obstacle_array(0j, region)
    assert in_obstacle_array(lat.omega1 + lat.omega2 + 0.99, region)
    small = FundamentalRegion(lat, CircleObstacle(abs(lat.omega1 + lat.omega2) / 10))
    assert not in_obstacle_array((lat.omega1 + lat.omega2) / 2, small)


@pytest.mark.parametrize("name", list(LATTICES))
def test_center_distance_brute_force(name, rng):
    region = region_for(name)
    lat = region.lattice
    z = rng.uniform(-10, 10, 2000) + 1j * rng.uniform(-10, 10, 2000)
    m, n = np.meshgrid(np.arange(-12, 13), np.arange(-12, 13))
    pts = (m * lat.omega1 + n * lat.omega2).ravel()
    exact = np.min(np.abs(z[:, None] - pts[None, :]), axis=1)
    got = center_distance(z, region)
    near = exact <= region.obstacle.radius
    assert np.allclose(got[near], exact[near], atol=1e-12)
    assert np.all(got >= exact - 1e-12)
    assert np.array_equal(in_obstacle_array(z, region), near)


def test_nearest_translate_indices(rng):
    region = region_for("skewed")
    lat = region.lattice
    m = rng.integers(-5, 6, 200)
    n = rng.integers(-5, 6, 200)
    offset = 0.9 * np.exp(2j * np.pi * rng.random(200))
    dist, bm, bn = nearest_translate(m * lat.omega1 + n * lat.omega2 + offset, region)
    assert np.array_equal(bm, m) and np.array_equal(bn, n)
    assert np.allclose(dist, 0.9)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-6, 6, allow_nan=False),
    st.floats(-6, 6, allow_nan=False),
    st.integers(-3, 3),
    st.integers(-3, 3),
    st.sampled_from(list(LATTICES)),
)
def test_membership_periodic(x, y, m, n, name):
    region = region_for(name)
    z = complex(x, y)
    d = center_distance(z, region)
    if abs(d - region.obstacle.radius) < 1e-9:
        return  # rounding can legitimately flip points on the circle itself
    assert in_obstacle_array(z, region) == in_obstacle_array(z + region.lattice.point(m, n), region)


def test_acceptance_fraction_square():
    region = region_for("square")
    blocks = 2
    accepted = len(sample_blocks(region, 0, 0, blocks))
    proposed = blocks * BLOCK_SIZE
    p = 1 - math.pi / 16
    sigma = math.sqrt(p * (1 - p) / proposed)
    assert abs(accepted / proposed - p) < 3 * sigma
    s = sample_region(region, 100_000, seed=0)
    assert len(s) == 100_000 and s.proposed == proposed


@pytest.mark.parametrize("name", list(LATTICES))
def test_monte_carlo_area(name):
    region = region_for(name)
    blocks = 16
    accepted = len(sample_blocks(region, 11, 0, blocks))
    proposed = blocks * BLOCK_SIZE
    p = accepted / proposed
    area = region.parallelogram_area
    se = area * math.sqrt(p * (1 - p) / proposed)
    assert abs(p * area - area_D0(region)) < 4 * se


@pytest.mark.parametrize("name", list(LATTICES))
def test_samples_valid(name):
    region = region_for(name)
    s = sample_region(region, 5000, seed=2)
    assert not in_obstacle_array(s.points, region).any()
    assert in_parallelogram(s.points, region).all()


def test_sampling_deterministic_and_seeded():
    region = region_for("hexagonal")
    a = sample_region(region, 3000, seed=7)
    b = sample_region(region, 3000, seed=7)
    c = sample_region(region, 3000, seed=8)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    assert a.provenance == {"kind": "monte_carlo", "count": 3000, "seed": 7, "proposed": BLOCK_SIZE, "stream": 0}


def test_streams_independent():
    region = region_for("square")
    a = sample_region(region, 1000, seed=0, stream=0)
    b = sample_region(region, 1000, seed=0, stream=1)
    assert not np.intersect1d(a.points, b.points).size


def test_partition_independence():
    region = region_for("rotated")
    whole = sample_blocks(region, 4, 0, 6)
    parts = np.concatenate([sample_blocks(region, 4, 0, 1), sample_blocks(region, 4, 1, 4), sample_blocks(region, 4, 4, 6)])
    assert np.array_equal(whole, parts)
    s = sample_region(region, len(whole), seed=4)
    assert np.array_equal(s.points, whole)


def test_sampling_errors(monkeypatch):
    region = region_for("square")
    with pytest.raises(ValueError):
        sample_region(region, 0)
    tight = FundamentalRegion(region.lattice, CircleObstacle(1.9))
    monkeypatch.setattr(geometry, "MIN_ACCEPTANCE", 0.5)
    with pytest.raises(GeometryError, match="acceptance"):
        sample_region(tight, 10)


def test_grid_samples():
    region = region_for("square")
    g = grid_samples(region, 100)
    assert g.kind == "grid" and g.seed is None
    assert not in_obstacle_array(g.points, region).any()
    assert len(g) / 100 ** 2 == pytest.approx(1 - math.pi / 16, abs=5e-3)
    assert np.array_equal(g.points, grid_samples(region, 100).points)
