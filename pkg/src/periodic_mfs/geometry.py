"""Obstacle array, the punctured period cell and quadrature samples over it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Lattice

# Proposals per random block; block b of stream k under seed s always draws
# from default_rng([s, k, b]), so results do not depend on how blocks are
# partitioned across workers. Stream 0 feeds the u_j quadrature, stream 1 the
# independent mean-velocity check.
BLOCK_SIZE = 1 << 16
MIN_ACCEPTANCE = 1e-3


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class CircleObstacle:
    radius: float
    center: complex = 0j

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError(f"obstacle radius must be positive, got {self.radius}")


def shortest_lattice_vector(lattice: Lattice) -> float:
    """Length of the shortest nonzero ``m*omega1 + n*omega2``.

    A vector of length L has ``|m| <= L*|omega2|/A`` and ``|n| <= L*|omega1|/A``
    (A = cell area), so with ``L = min(|omega1|, |omega2|)`` as an upper
    bound the finite enumeration below is exhaustive.
    """
    w1, w2 = lattice.omega1, lattice.omega2
    area = lattice.cell_area
    bound = min(abs(w1), abs(w2))
    mmax = int(math.floor(bound * abs(w2) / area)) + 1
    nmax = int(math.floor(bound * abs(w1) / area)) + 1
    m, n = np.meshgrid(np.arange(-mmax, mmax + 1), np.arange(-nmax, nmax + 1))
    lengths = np.abs(m * w1 + n * w2)
    lengths[(m == 0) & (n == 0)] = np.inf
    return float(lengths.min())


@dataclass(frozen=True)
class FundamentalRegion:
    """Period parallelogram anchored at ``z0`` with the obstacle copies removed.

    ``z0`` defaults to the obstacle centre and must lie strictly inside it.
    """

    lattice: Lattice
    obstacle: CircleObstacle
    z0: complex = None

    def __post_init__(self):
        if self.z0 is None:
            object.__setattr__(self, "z0", complex(self.obstacle.center))
        if not abs(self.z0 - self.obstacle.center) < self.obstacle.radius:
            raise GeometryError("anchor z0 must lie strictly inside the obstacle")
        gap = shortest_lattice_vector(self.lattice)
        if not gap > 2 * self.obstacle.radius:
            raise GeometryError(
                f"obstacles overlap: shortest period {gap:.6g} <= 2r = {2 * self.obstacle.radius:.6g}"
            )

    @property
    def parallelogram_area(self) -> float:
        return self.lattice.cell_area


def area_D0(region: FundamentalRegion) -> float:
    """Parallelogram area minus one disk (the clipped corner pieces tile one disk)."""
    area = region.lattice.cell_area - math.pi * region.obstacle.radius ** 2
    if area <= 0:
        raise GeometryError("obstacle area exceeds the period cell")
    return area


def nearest_translate(z, region: FundamentalRegion):
    """Distance to the nearest obstacle centre translate and its indices ``(m, n)``.

    Exact whenever the distance is at most r. Beyond that it is only a lower
    bound, which is all the membership test needs. Solves
    ``z - center = a*omega1 + b*omega2`` and tests every lattice point that
    can lie within distance r, i.e. ``|a - m| <= r*|omega2|/A`` and
    ``|b - n| <= r*|omega1|/A``. Four corners around ``(a, b)`` are not
    enough for skewed cells.
    """
    lat = region.lattice
    r = region.obstacle.radius
    z = np.asarray(z, dtype=np.complex128)
    d = z - region.obstacle.center
    a, b = lat.coordinates(d)
    ra = r * abs(lat.omega2) / lat.cell_area
    rb = r * abs(lat.omega1) / lat.cell_area
    m_lo = np.floor(a - ra).astype(np.int64)
    n_lo = np.floor(b - rb).astype(np.int64)
    span_m = int(math.ceil(2 * ra)) + 1
    span_n = int(math.ceil(2 * rb)) + 1
    best = np.full(z.shape, np.inf)
    bm = np.zeros(z.shape, dtype=np.int64)
    bn = np.zeros(z.shape, dtype=np.int64)
    for dm in range(span_m + 1):
        for dn in range(span_n + 1):
            m = m_lo + dm
            n = n_lo + dn
            dist = np.abs(d - (m * lat.omega1 + n * lat.omega2))
            closer = dist < best
            best = np.where(closer, dist, best)
            bm = np.where(closer, m, bm)
            bn = np.where(closer, n, bn)
    return best, bm, bn


def center_distance(z, region: FundamentalRegion):
    """Distance from ``z`` to the nearest obstacle centre translate (see :func:`nearest_translate`)."""
    return nearest_translate(z, region)[0]


def in_obstacle_array(z, region: FundamentalRegion):
    """True where ``z`` lies in the closure of some obstacle copy."""
    inside = center_distance(z, region) <= region.obstacle.radius
    return inside[()] if inside.ndim == 0 else inside


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    seed: int | None
    requested: int
    proposed: int = 0
    kind: str = "monte_carlo"
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def provenance(self) -> dict:
        out = {"kind": self.kind, "count": len(self.points), "seed": self.seed, "proposed": self.proposed}
        out.update(self.extra)
        return out


def _block(region: FundamentalRegion, seed: int, index: int, stream: int = 0):
    rng = np.random.default_rng([seed, stream, index])
    a = rng.random((BLOCK_SIZE, 2))
    lat = region.lattice
    z = region.z0 + a[:, 0] * lat.omega1 + a[:, 1] * lat.omega2
    return z[~in_obstacle_array(z, region)]


def sample_blocks(region: FundamentalRegion, seed: int, start: int, stop: int, stream: int = 0):
    """Accepted points of random blocks ``start <= b < stop``, concatenated in order.

    Workers can each take a disjoint block range; concatenating their outputs
    in block order reproduces :func:`sample_region` exactly.
    """
    parts = [_block(region, seed, b, stream) for b in range(start, stop)]
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.complex128)


def sample_region(region: FundamentalRegion, count: int, seed: int = 0, stream: int = 0) -> SampleSet:
    """Uniform rejection sampling of the punctured cell, deterministic in ``seed``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    acceptance = area_D0(region) / region.parallelogram_area
    if acceptance < MIN_ACCEPTANCE:
        raise GeometryError(f"acceptance ratio {acceptance:.2e} too small; obstacle nearly fills the cell")
    parts = []
    have = 0
    blocks = 0
    while have < count:
        pts = _block(region, seed, blocks, stream)
        blocks += 1
        parts.append(pts)
        have += len(pts)
    pts = np.concatenate(parts)[:count]
    return SampleSet(pts, seed, count, proposed=blocks * BLOCK_SIZE, extra={"stream": stream})


def grid_samples(region: FundamentalRegion, n_side: int) -> SampleSet:
    """Midpoint tensor grid over the parallelogram with obstacle points rejected.

    Equal weights are exact for the parallelogram, so the kept nodes are a
    deterministic substitute for :func:`sample_region`.
    """
    if n_side < 1:
        raise ValueError("n_side must be positive")
    t = (np.arange(n_side) + 0.5) / n_side
    a1, a2 = np.meshgrid(t, t, indexing="ij")
    lat = region.lattice
    z = (region.z0 + a1 * lat.omega1 + a2 * lat.omega2).ravel()
    keep = z[~in_obstacle_array(z, region)]
    return SampleSet(keep, None, n_side * n_side, proposed=n_side * n_side, kind="grid", extra={"n_side": n_side})
