"""Field sampling on a rectangular window, streamline contours and their export.

Streamlines are level sets of the stream function, so they are extracted by
marching squares on a grid of psi values rather than by integrating the
velocity field.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .geometry import FundamentalRegion, center_distance, in_obstacle_array, nearest_translate
from .mfs import FlowModel, eval_stream, eval_velocity, surface_level


@dataclass(frozen=True)
class FieldGrid:
    """psi and velocity at cell-centre nodes of a window.

    Arrays are indexed ``[j, i]`` with ``j`` along y and ``i`` along x.
    ``window`` is ``(x_min, x_max, y_min, y_max)`` in units of the obstacle
    radius; ``x`` and ``y`` hold node coordinates in length units. Masked
    nodes (inside an obstacle copy) carry NaN in ``psi`` and ``vel``.
    ``psi_band`` holds psi at masked nodes within a thin band under each
    obstacle surface (NaN elsewhere); only the surface contour uses it.
    psi is only pseudo-periodic, so each obstacle copy has its own surface
    value; ``band_level`` gives it for every band node and
    ``surface_levels`` lists the distinct values met in the window.
    """

    window: tuple
    nx: int
    ny: int
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    vel: np.ndarray
    mask: np.ndarray
    psi_band: np.ndarray
    band_level: np.ndarray
    surface_levels: tuple
    C: float
    U: float
    radius: float

    @property
    def z(self):
        return self.x[None, :] + 1j * self.y[:, None]


@dataclass(frozen=True)
class StreamlineSet:
    """Contour polylines (``(K, 2)`` arrays in length units) with their levels.

    ``level_index[k]`` is the index into ``levels`` of polyline ``k``; the
    last level, at ``surface_level``, is the obstacle surface value ``C``.
    Surface polylines of other obstacle copies share that index; their
    actual values are listed in ``meta["surface_levels"]``.
    """

    levels: np.ndarray
    polylines: list
    level_index: list
    surface_level: int | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.polylines)


def _region_of(model: FlowModel) -> FundamentalRegion:
    return model.region if model.region is not None else FundamentalRegion(model.lattice, model.obstacle)


def eval_grid(model: FlowModel, window, nx: int, ny: int, band_cells: float = 1.5) -> FieldGrid:
    x_min, x_max, y_min, y_max = (float(w) for w in window)
    if nx < 2 or ny < 2:
        raise ValueError("nx and ny must be at least 2")
    if not (x_max > x_min and y_max > y_min):
        raise ValueError(f"degenerate window {window}")
    r = model.config.radius
    dx = (x_max - x_min) * r / nx
    dy = (y_max - y_min) * r / ny
    x = x_min * r + (np.arange(nx) + 0.5) * dx
    y = y_min * r + (np.arange(ny) + 0.5) * dy
    z = x[None, :] + 1j * y[:, None]
    region = _region_of(model)
    dist, cm, cn = nearest_translate(z, region)
    mask = dist <= r
    psi = np.full(z.shape, np.nan)
    vel = np.full(z.shape, np.nan + 0j)
    free = ~mask
    if free.any():
        psi[free] = eval_stream(model, z[free])
        vel[free] = eval_velocity(model, z[free])
    # band stays well clear of the charge ring at placement_ratio * r
    band = min(band_cells * max(dx, dy), 0.5 * (1.0 - model.config.placement_ratio) * r)
    in_band = mask & (dist >= r - band)
    psi_band = np.full(z.shape, np.nan)
    band_level = np.full(z.shape, np.nan)
    if in_band.any():
        psi_band[in_band] = eval_stream(model, z[in_band])
        copies = {(int(a), int(b)) for a, b in zip(cm[in_band], cn[in_band])}
        for a, b in sorted(copies):
            band_level[in_band & (cm == a) & (cn == b)] = surface_level(model, a, b)
    levels = tuple(sorted(set(band_level[in_band].tolist())))
    return FieldGrid(
        (x_min, x_max, y_min, y_max), nx, ny, x, y, psi, vel, mask, psi_band,
        band_level, levels, model.C, model.U, r,
    )


# Segment table for marching squares. Corner bits: 1 = (i, j), 2 = (i+1, j),
# 4 = (i+1, j+1), 8 = (i, j+1); a bit is set when the corner is >= level.
# Edges: 0 bottom, 1 right, 2 top, 3 left. Saddles (5, 10) are resolved
# separately by the cell-average rule.
_SEGMENTS = {
    1: ((3, 0),), 2: ((0, 1),), 3: ((3, 1),), 4: ((1, 2),), 6: ((0, 2),), 7: ((3, 2),),
    8: ((2, 3),), 9: ((0, 2),), 11: ((1, 2),), 12: ((1, 3),), 13: ((0, 1),), 14: ((0, 3),),
}
# saddle case -> (segments if centre >= level, segments if centre < level)
_SADDLES = {
    5: (((0, 1), (2, 3)), ((3, 0), (1, 2))),
    10: (((3, 0), (1, 2)), ((0, 1), (2, 3))),
}


def _edge_crossings(f, xs, ys):
    """Crossing points along every horizontal and vertical grid edge (NaN if none)."""
    with np.errstate(invalid="ignore", divide="ignore"):
        th = f[:, :-1] / (f[:, :-1] - f[:, 1:])
        tv = f[:-1, :] / (f[:-1, :] - f[1:, :])
    hx = xs[None, :-1] + th * (xs[1:] - xs[:-1])[None, :]
    hy = np.broadcast_to(ys[:, None], th.shape)
    vx = np.broadcast_to(xs[None, :], tv.shape)
    vy = ys[:-1, None] + tv * (ys[1:] - ys[:-1])[:, None]
    return (hx, hy), (vx, vy)


def _cell_segments(f):
    """Marching-squares segments of the zero level of ``f`` as pairs of edge keys.

    Edge keys: ``("h", j, i)`` is the edge from node (j, i) to (j, i+1);
    ``("v", j, i)`` from (j, i) to (j+1, i). Cells with a NaN corner are skipped.
    """
    f00 = f[:-1, :-1]
    f10 = f[:-1, 1:]
    f11 = f[1:, 1:]
    f01 = f[1:, :-1]
    valid = np.isfinite(f00) & np.isfinite(f10) & np.isfinite(f11) & np.isfinite(f01)
    case = (
        (f00 >= 0).astype(np.int8)
        | ((f10 >= 0).astype(np.int8) << 1)
        | ((f11 >= 0).astype(np.int8) << 2)
        | ((f01 >= 0).astype(np.int8) << 3)
    )
    case = np.where(valid, case, 0)
    center_high = (f00 + f10 + f11 + f01) >= 0
    segs = []
    js, is_ = np.nonzero((case != 0) & (case != 15))
    for j, i in zip(js.tolist(), is_.tolist()):
        c = int(case[j, i])
        edges = ("h", j, i), ("v", j, i + 1), ("h", j + 1, i), ("v", j, i)
        if c in _SADDLES:
            pairs = _SADDLES[c][0 if center_high[j, i] else 1]
        else:
            pairs = _SEGMENTS[c]
        for a, b in pairs:
            segs.append((edges[a], edges[b]))
    return segs


def _join(segs):
    """Chain segments sharing an edge key into polylines (lists of keys)."""
    adj = {}
    for k, (a, b) in enumerate(segs):
        adj.setdefault(a, []).append(k)
        adj.setdefault(b, []).append(k)
    used = [False] * len(segs)
    lines = []

    def walk(start_key, k):
        line = [start_key]
        key = start_key
        while k is not None:
            used[k] = True
            a, b = segs[k]
            key = b if a == key else a
            line.append(key)
            k = next((s for s in adj[key] if not used[s]), None)
        return line

    # open chains start at keys touched by a single segment, in sorted order
    for key in sorted(adj):
        if len(adj[key]) == 1 and not used[adj[key][0]]:
            lines.append(walk(key, adj[key][0]))
    for k in range(len(segs)):
        if not used[k]:
            lines.append(walk(segs[k][0], k))
    return lines


def _contours(values, level, xs, ys):
    f = values - level
    (hx, hy), (vx, vy) = _edge_crossings(f, xs, ys)
    out = []
    for keys in _join(_cell_segments(f)):
        pts = np.empty((len(keys), 2))
        for p, (kind, j, i) in enumerate(keys):
            if kind == "h":
                pts[p] = hx[j, i], hy[j, i]
            else:
                pts[p] = vx[j, i], vy[j, i]
        out.append(pts)
    return out


def _split_outside(poly, region):
    inside = in_obstacle_array(poly[:, 0] + 1j * poly[:, 1], region)
    if not inside.any():
        return [poly]
    pieces = []
    start = None
    for k, bad in enumerate(inside):
        if not bad and start is None:
            start = k
        elif bad and start is not None:
            pieces.append(poly[start:k])
            start = None
    if start is not None:
        pieces.append(poly[start:])
    return [p for p in pieces if len(p) >= 2]


def extract_streamlines(grid: FieldGrid, n_levels: int, region: FundamentalRegion | None = None) -> StreamlineSet:
    """Contours of psi at ``n_levels`` levels plus the obstacle surface level.

    Regular levels are spaced uniformly between the 1st and 99th percentile
    of unmasked psi and are traced only through fully unmasked cells. The
    surface level is traced once per distinct copy value ``C + m*dpsi1 +
    n*dpsi2`` and additionally uses the thin band of values under the
    matching obstacle surfaces, so it follows the circles themselves. Saddle cells are
    resolved by comparing the mean of the four corners with the level.
    """
    if n_levels < 1:
        raise ValueError("n_levels must be at least 1")
    finite = grid.psi[~grid.mask]
    if finite.size == 0:
        return StreamlineSet(np.empty(0), [], [], None)
    lo, hi = np.percentile(finite, [1.0, 99.0])
    levels = np.append(np.linspace(lo, hi, n_levels), grid.C)
    polylines = []
    level_index = []
    for k, level in enumerate(levels[:-1]):
        for poly in _contours(grid.psi, level, grid.x, grid.y):
            pieces = _split_outside(poly, region) if region is not None else [poly]
            for piece in pieces:
                polylines.append(piece)
                level_index.append(k)
    for value in grid.surface_levels:
        band = np.where(grid.band_level == value, grid.psi_band, np.nan)
        surface = np.where(grid.mask, band, grid.psi)
        for poly in _contours(surface, value, grid.x, grid.y):
            polylines.append(poly)
            level_index.append(n_levels)
    return StreamlineSet(levels, polylines, level_index, n_levels, {"surface_levels": list(grid.surface_levels)})


def surface_deviation(streamlines: StreamlineSet, region: FundamentalRegion, window, n_angles: int = 720):
    """How far the surface contour strays from the obstacle circles.

    Returns ``(coverage, stray)`` in length units. ``coverage`` is the largest
    distance from a point on any circle (inside the window) to the nearest
    surface-level vertex. ``stray`` is the largest distance from the circle of
    a surface-level vertex lying in the closed obstacle. Both are small when
    the computed ``psi = C`` set hugs the circles.
    """
    r = region.obstacle.radius
    verts = [p for p, k in zip(streamlines.polylines, streamlines.level_index) if k == streamlines.surface_level]
    if not verts:
        return math.inf, math.inf
    V = np.concatenate(verts)
    vz = V[:, 0] + 1j * V[:, 1]
    inside = in_obstacle_array(vz, region)
    stray = float(np.max(r - center_distance(vz[inside], region))) if inside.any() else 0.0
    x_min, x_max, y_min, y_max = (w * r for w in window)
    coverage = 0.0
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    for c in obstacle_centers(region, window):
        pts = c + r * np.exp(1j * theta)
        keep = (pts.real > x_min) & (pts.real < x_max) & (pts.imag > y_min) & (pts.imag < y_max)
        for p in pts[keep]:
            coverage = max(coverage, float(np.min(np.abs(vz - p))))
    return coverage, stray


def obstacle_centers(region: FundamentalRegion, window):
    """Centres of obstacle copies whose disk meets the window (window in units of r)."""
    r = region.obstacle.radius
    lat = region.lattice
    x_min, x_max, y_min, y_max = (w * r for w in window)
    corners = np.array([x_min + 1j * y_min, x_max + 1j * y_min, x_min + 1j * y_max, x_max + 1j * y_max])
    a, b = lat.coordinates(corners - region.obstacle.center)
    pad_a = r * abs(lat.omega2) / lat.cell_area + 1
    pad_b = r * abs(lat.omega1) / lat.cell_area + 1
    out = []
    for m in range(int(math.floor(a.min() - pad_a)), int(math.ceil(a.max() + pad_a)) + 1):
        for n in range(int(math.floor(b.min() - pad_b)), int(math.ceil(b.max() + pad_b)) + 1):
            c = region.obstacle.center + m * lat.omega1 + n * lat.omega2
            dx = max(x_min - c.real, 0.0, c.real - x_max)
            dy = max(y_min - c.imag, 0.0, c.imag - y_max)
            if math.hypot(dx, dy) < r:
                out.append(complex(c))
    out.sort(key=lambda c: (c.imag, c.real))
    return out


def _g(v):
    s = f"{v:.6g}"
    return "0" if s == "-0" else s


def render_svg(streamlines: StreamlineSet, region: FundamentalRegion, window, metadata: dict | None = None) -> str:
    """Standalone SVG 1.1 document; coordinates are in units of r with y up.

    One ``<path>`` per polyline, one ``<circle>`` per obstacle copy meeting
    the window, and a frame with tick labels. Output is byte-for-byte
    deterministic for identical inputs.
    """
    r = region.obstacle.radius
    x_min, x_max, y_min, y_max = (float(w) for w in window)
    w = x_max - x_min
    h = y_max - y_min
    pad = 0.12 * max(w, h)
    font = 0.035 * max(w, h)
    stroke = 0.004 * max(w, h)
    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write(
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{_g(x_min - pad)} {_g(-y_max - pad)} {_g(w + 2 * pad)} {_g(h + 2 * pad)}">\n'
    )
    if metadata is not None:
        out.write(f"<metadata>{escape(json.dumps(metadata, sort_keys=True))}</metadata>\n")
    out.write(
        f'<defs><clipPath id="window"><rect x="{_g(x_min)}" y="{_g(-y_max)}" '
        f'width="{_g(w)}" height="{_g(h)}"/></clipPath></defs>\n'
    )
    out.write('<g clip-path="url(#window)">\n')
    out.write(f'<g fill="#d0d0d0" stroke="black" stroke-width="{_g(stroke)}">\n')
    for c in obstacle_centers(region, window):
        out.write(f'<circle cx="{_g(c.real / r)}" cy="{_g(-c.imag / r)}" r="1"/>\n')
    out.write("</g>\n")
    out.write(f'<g fill="none" stroke="#1f4e9c" stroke-width="{_g(stroke)}">\n')
    for poly, k in zip(streamlines.polylines, streamlines.level_index):
        pts = poly / r
        d = "M" + " L".join(f"{_g(px)} {_g(-py)}" for px, py in pts)
        out.write(f'<path d="{d}" data-level="{k}"/>\n')
    out.write("</g>\n</g>\n")
    out.write(f'<g stroke="black" stroke-width="{_g(stroke)}" fill="none">\n')
    out.write(f'<rect x="{_g(x_min)}" y="{_g(-y_max)}" width="{_g(w)}" height="{_g(h)}"/>\n')
    out.write("</g>\n")
    out.write(f'<g font-family="sans-serif" font-size="{_g(font)}" fill="black">\n')
    for t in _ticks(x_min, x_max):
        out.write(f'<line x1="{_g(t)}" y1="{_g(-y_min)}" x2="{_g(t)}" y2="{_g(-y_min + font * 0.5)}" stroke="black" stroke-width="{_g(stroke)}"/>\n')
        out.write(f'<text x="{_g(t)}" y="{_g(-y_min + font * 1.6)}" text-anchor="middle">{_g(t)}</text>\n')
    for t in _ticks(y_min, y_max):
        out.write(f'<line x1="{_g(x_min - font * 0.5)}" y1="{_g(-t)}" x2="{_g(x_min)}" y2="{_g(-t)}" stroke="black" stroke-width="{_g(stroke)}"/>\n')
        out.write(f'<text x="{_g(x_min - font * 0.8)}" y="{_g(-t + font * 0.35)}" text-anchor="end">{_g(t)}</text>\n')
    out.write(f'<text x="{_g(x_min + w / 2)}" y="{_g(-y_min + font * 3)}" text-anchor="middle">Re z/r</text>\n')
    out.write(
        f'<text x="{_g(x_min - font * 2.8)}" y="{_g(-y_min - h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 {_g(x_min - font * 2.8)} {_g(-y_min - h / 2)})">Im z/r</text>\n'
    )
    out.write("</g>\n</svg>\n")
    return out.getvalue()


def _ticks(lo, hi, target=5):
    span = hi - lo
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9)
    ticks = []
    k = first
    while k * step <= hi + 1e-9 * step:
        ticks.append(round(k * step, 12))
        k += 1
    return ticks


def write_field_csv(grid: FieldGrid) -> str:
    """CSV with header ``x,y,psi,u,v,mask``; rows run over y (outer) then x.

    Coordinates are in length units; ``(u, v) = (Re f', -Im f')``. Masked
    nodes leave the field columns empty.
    """
    out = io.StringIO()
    out.write("x,y,psi,u,v,mask\n")
    for j in range(grid.ny):
        yj = repr(float(grid.y[j]))
        for i in range(grid.nx):
            xi = repr(float(grid.x[i]))
            if grid.mask[j, i]:
                out.write(f"{xi},{yj},,,,1\n")
            else:
                fp = grid.vel[j, i]
                out.write(f"{xi},{yj},{float(grid.psi[j, i])!r},{float(fp.real)!r},{float(-fp.imag)!r},0\n")
    return out.getvalue()
