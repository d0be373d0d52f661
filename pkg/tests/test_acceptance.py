"""Acceptance checks, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (also printed at the end of the
pytest run by the hook in ``conftest.py``). Run on its own with::

    pytest tests/test_acceptance.py -v

Timings exclude numba compilation, which is triggered once up front.
"""
import cmath
import json
import math
import re
import time
import xml.etree.ElementTree as ET
from contextlib import contextmanager

import numpy as np
import pytest

from periodic_mfs import cli
from periodic_mfs.diagnostics import (
    DEFAULT_FLOOR,
    average_velocity,
    boundary_error,
    convergence_sweep,
    fit_decay_rate,
)
from periodic_mfs.geometry import center_distance, in_obstacle_array, sample_region
from periodic_mfs.lattice import make_lattice
from periodic_mfs.mfs import (
    eval_potential,
    eval_stream,
    eval_velocity,
    solve_flow,
    surface_level,
)
from periodic_mfs.theta import log_abs_theta1, theta1, theta1_product

from conftest import LATTICES, region_for

RESULTS = []

RATIOS = (0.4, 0.5, 0.6, 0.7)
N_SWEEP = list(range(16, 65, 8))
REFERENCE_RATES = {
    "square": (0.52, 0.51, 0.59, 0.68),
    "hexagonal": (0.51, 0.51, 0.58, 0.68),
}
SWEEP_SAMPLES = 100_000
MEAN_FLOW_SAMPLES = 1_000_000


@contextmanager
def criterion(number, title):
    t0 = time.perf_counter()
    details = []
    try:
        yield details
    except BaseException as exc:
        line = f"FAIL  criterion {number}: {title} ({time.perf_counter() - t0:.1f} s) :: {exc}".splitlines()[0]
        RESULTS.append(line)
        print(line)
        raise
    line = f"PASS  criterion {number}: {title} ({time.perf_counter() - t0:.1f} s)"
    if details:
        line += " :: " + "; ".join(details)
    RESULTS.append(line)
    print(line)


@pytest.fixture(scope="module", autouse=True)
def warm_up():
    region = region_for("square")
    samples = sample_region(region, 200, seed=0)
    m = solve_flow(region, 8, 0.5, 1.0, samples)
    eval_velocity(m, samples.points)
    eval_potential(m, samples.points[:4])
    theta1(0.1, region.lattice)


def flow_points(region, rng, count, margin=0.1):
    lat = region.lattice
    pts = []
    while len(pts) < count:
        a, b = rng.uniform(-1.5, 1.5, 2)
        z = a * lat.omega1 + b * lat.omega2
        if center_distance(z, region) > region.obstacle.radius + margin:
            pts.append(z)
    return np.array(pts)


def test_criterion_1_theta_cross_validation():
    with criterion(1, "theta series vs product, reduction identity") as notes:
        t0 = time.perf_counter()
        rng = np.random.default_rng(1)
        worst_prod = worst_red = 0.0
        for name, (w1, w2) in LATTICES.items():
            lat = make_lattice(w1, w2)
            a = rng.uniform(-0.5, 0.5, 200)
            b = rng.uniform(-0.5, 0.5, 200)
            v = a + b * lat.tau
            s = theta1(v, lat)
            p = theta1_product(v, lat)
            worst_prod = max(worst_prod, float(np.max(np.abs(s - p) / np.abs(p))))
            # reduced arguments away from the zero at the origin for the shifted check
            v = v[np.abs(v) > 0.05][:50]
            base = theta1(v, lat)
            for m in range(-3, 4):
                for n in range(-3, 4):
                    factor = (-1) ** (m + n) * np.exp(-1j * np.pi * lat.tau * n * n - 2j * np.pi * n * v)
                    expected = factor * base
                    got = theta1(v + m + n * lat.tau, lat)
                    worst_red = max(worst_red, float(np.max(np.abs(got - expected) / np.abs(expected))))
                    la = log_abs_theta1(v + m + n * lat.tau, lat)
                    assert np.max(np.abs(la - np.log(np.abs(expected)))) < 1e-12 * max(1.0, np.max(np.abs(la)))
        elapsed = time.perf_counter() - t0
        notes.append(f"series/product max rel {worst_prod:.1e}, reduction max rel {worst_red:.1e}, {elapsed:.2f} s")
        assert worst_prod < 1e-13
        assert worst_red < 1e-12
        assert elapsed < 1.0


@pytest.mark.parametrize("name", list(REFERENCE_RATES))
def test_criterion_2_decay_rates(name):
    with criterion(2, f"decay rates, lattice {name}") as notes:
        t0 = time.perf_counter()
        region = region_for(name)
        samples = sample_region(region, SWEEP_SAMPLES, seed=0)
        rates = []
        for ratio in RATIOS:
            rates.append(fit_decay_rate(convergence_sweep(region, N_SWEEP, ratio, samples)).rate)
        elapsed = time.perf_counter() - t0
        notes.append(
            "rho " + " ".join(f"{q}:{r:.3f}(ref {t})" for q, r, t in zip(RATIOS, rates, REFERENCE_RATES[name]))
            + f", {elapsed:.1f} s"
        )
        for r, t in zip(rates, REFERENCE_RATES[name]):
            assert abs(r - t) <= 0.06
        assert elapsed < 60


@pytest.mark.parametrize("name", list(LATTICES))
def test_criterion_3_average_velocity(name):
    with criterion(3, f"average velocity, lattice {name}") as notes:
        t0 = time.perf_counter()
        region = region_for(name)
        quad = sample_region(region, MEAN_FLOW_SAMPLES, seed=0, stream=0)
        model = solve_flow(region, 64, 0.7, 1.0, quad)
        check = sample_region(region, MEAN_FLOW_SAMPLES, seed=0, stream=1)
        assert not np.intersect1d(quad.points[:10000], check.points).size
        av = average_velocity(model, check)
        elapsed = time.perf_counter() - t0
        notes.append(f"<v>/U = ({av.u:.5f}, {av.v:.1e}) +- ({av.stderr_u:.0e}, {av.stderr_v:.0e}), {elapsed:.1f} s")
        assert abs(av.u - 1) <= 5e-3 and abs(av.v) <= 5e-3
        assert elapsed < 30


def test_criterion_4_exact_cancellation():
    with criterion(4, "mean of f' over the u_j sample set equals U") as notes:
        worst = 0.0
        for name in LATTICES:
            region = region_for(name)
            samples = sample_region(region, 1000, seed=7)
            for U in (1.0, -2.5):
                m = solve_flow(region, 32, 0.6, U, samples)
                mean = eval_velocity(m, samples.points).mean()
                worst = max(worst, abs(mean - U) / abs(U))
        notes.append(f"max rel deviation {worst:.1e}")
        assert worst <= 1e-12


def test_criterion_5_pseudo_periodicity():
    with criterion(5, "pseudo-periodicity of f_N, double periodicity of f_N'") as notes:
        worst_f = worst_fp = 0.0
        rng = np.random.default_rng(5)
        for name in LATTICES:
            region = region_for(name)
            lat = region.lattice
            m = solve_flow(region, 64, 0.7, 1.0, sample_region(region, 20_000, seed=1))
            Q, zeta, u = m.Q, m.config.charge_points, m.u
            j1 = lat.omega1 * (m.U + 1j / (2 * np.pi) * np.sum(Q * u))
            j2 = m.U * lat.omega2 + np.sum(Q * (zeta / lat.omega1 + 1j / (2 * np.pi) * lat.omega2 * u))
            z = flow_points(region, rng, 50)
            f = eval_potential(m, z)
            scale = abs(m.U) * m.config.radius
            worst_f = max(
                worst_f,
                np.max(np.abs(eval_potential(m, z + lat.omega1) - f - j1)) / scale,
                np.max(np.abs(eval_potential(m, z + lat.omega2) - f - j2)) / scale,
            )
            z = flow_points(region, rng, 100)
            fp = eval_velocity(m, z)
            worst_fp = max(
                worst_fp,
                np.max(np.abs(eval_velocity(m, z + lat.omega1) - fp)) / abs(m.U),
                np.max(np.abs(eval_velocity(m, z + lat.omega2) - fp)) / abs(m.U),
            )
        notes.append(f"f_N jumps {worst_f:.1e} U r, f' periodicity {worst_fp:.1e} U")
        assert worst_f <= 1e-11
        assert worst_fp <= 1e-11


def test_criterion_6_boundary_conditions():
    with criterion(6, "collocation residual, monotone epsilon_N, shifted boundaries") as notes:
        region = region_for("square")
        samples = sample_region(region, 20_000, seed=2)
        worst_res = 0.0
        for ratio in RATIOS:
            eps = []
            for N in N_SWEEP:
                m = solve_flow(region, N, ratio, 1.0, samples)
                worst_res = max(worst_res, m.residual)
                zc = m.config.collocation_points
                worst_res = max(worst_res, float(np.max(np.abs(eval_stream(m, zc) - m.C))))
                eps.append(boundary_error(m))
            floor_at = next((k for k, e in enumerate(eps) if e <= DEFAULT_FLOOR), len(eps))
            head = eps[: floor_at + 1]
            assert all(b < a for a, b in zip(head, head[1:])), f"ratio {ratio}: {eps}"
            assert all(e <= 10 * DEFAULT_FLOOR for e in eps[floor_at:]), f"ratio {ratio}: {eps}"
        m = solve_flow(region, 48, 0.7, 1.0, samples)
        e = boundary_error(m)
        K = 16 * m.config.N
        zb = m.config.center + m.config.radius * np.exp(2j * np.pi * (np.arange(K) + 0.5) / K)
        worst_shift = 0.0
        for a in range(-2, 3):
            for b in range(-2, 3):
                dev = np.max(np.abs(eval_stream(m, zb + region.lattice.point(a, b)) - surface_level(m, a, b)))
                worst_shift = max(worst_shift, dev)
        notes.append(f"residual {worst_res:.1e}, eps_48 {e:.2e}, shifted copies {worst_shift:.2e}")
        assert worst_res <= 1e-10
        assert worst_shift <= e * (1 + 1e-6) + 1e-12


def test_criterion_7_harmonicity():
    with criterion(7, "finite-difference Laplacian refines at second order") as notes:
        region = region_for("square")
        m = solve_flow(region, 64, 0.7, 1.0, sample_region(region, 20_000, seed=3))
        probes = flow_points(region, np.random.default_rng(7), 20, margin=0.5)

        def lap(h):
            c = eval_stream(m, probes)
            s = sum(eval_stream(m, probes + d) for d in (h, -h, 1j * h, -1j * h))
            return np.abs(s - 4 * c) / h ** 2

        ratio = lap(0.1) / lap(0.05)
        notes.append(f"ratios in [{ratio.min():.3f}, {ratio.max():.3f}]")
        assert np.all((ratio >= 3.5) & (ratio <= 4.5))


def test_criterion_8_figure_pipeline(tmp_path):
    with criterion(8, "cmd_field SVG, surface contour within 2 cells at 400x400") as notes:
        cfg_path = tmp_path / "square.json"
        cfg_path.write_text(json.dumps({"omega1": [4, 0], "omega2": [0, 4], "N": 64, "placement_ratio": 0.7}))
        svg = tmp_path / "square.svg"
        levels = 30
        code = cli.cmd_field(str(cfg_path), None, 400, 400, levels, str(svg), str(tmp_path / "square.csv"))
        assert code == 0
        root = ET.parse(svg).getroot()
        ns = "{http://www.w3.org/2000/svg}"
        meta = json.loads(root.find(ns + "metadata").text)
        window = meta["window"]
        assert window == [-2.0, 6.0, -2.0, 6.0]
        assert len(list(root.iter(ns + "circle"))) == 4
        verts = []
        for path in root.iter(ns + "path"):
            if path.get("data-level") == str(levels):
                nums = np.array([float(t) for t in re.findall(r"-?[\d.]+(?:e-?\d+)?", path.get("d"))])
                verts.append(nums[0::2] - 1j * nums[1::2])
        assert verts, "no surface contour emitted"
        vz = np.concatenate(verts)
        region = region_for("square")
        cell = (window[1] - window[0]) / 400
        inside = in_obstacle_array(vz, region)
        stray = float(np.max(1.0 - center_distance(vz[inside], region))) if inside.any() else 0.0
        theta = 2 * np.pi * np.arange(720) / 720
        coverage = 0.0
        for c in (0, 4, 4j, 4 + 4j):
            for p in c + np.exp(1j * theta):
                coverage = max(coverage, float(np.min(np.abs(vz - p))))
        notes.append(f"coverage {coverage / cell:.2f} cells, inward stray {stray / cell:.2f} cells")
        assert coverage <= 2 * cell
        assert stray <= 2 * cell
