"""Time the numba and numpy kernel backends on the solver's hot loops.

Usage::

    python benchmarks/bench_kernels.py [--pairs 2000000] [--repeat 3]

Each kernel runs once untimed (numba compilation, cache warm-up), then the
best of ``--repeat`` runs is reported together with the max deviation
between backends.
"""
import argparse
import time

import numpy as np

from periodic_mfs import _backend, _kernels_np
from periodic_mfs.geometry import CircleObstacle, FundamentalRegion, sample_region
from periodic_mfs.lattice import make_lattice
from periodic_mfs.mfs import place_points
from periodic_mfs.theta import DEFAULT_ACCURACY, series_coefficients


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2_000_000, help="charge/sample pairs per kernel call")
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    lat = make_lattice(4, 4j)
    region = FundamentalRegion(lat, CircleObstacle(1.0))
    cfg = place_points(region.obstacle, args.N, 0.7)
    zeta = np.ascontiguousarray(cfg.charge_points)
    z = sample_region(region, max(args.pairs // args.N, 1), seed=1).points
    Q = np.random.default_rng(0).standard_normal(args.N)
    coeffs = series_coefficients(lat)
    tol = DEFAULT_ACCURACY.term_tolerance
    inv_w1 = 1 / lat.omega1
    tau = lat.tau

    cases = {
        "pair_log_deriv_sums": lambda k: k.pair_log_deriv_sums(z, zeta, inv_w1, tau, coeffs, tol)[0],
        "pair_log_abs_weighted": lambda k: k.pair_log_abs_weighted(z, zeta, Q, inv_w1, tau, coeffs, tol)[0],
        "pair_log_deriv_weighted": lambda k: k.pair_log_deriv_weighted(z, zeta, Q, inv_w1, tau, coeffs, tol)[0],
    }
    try:
        from periodic_mfs import _kernels_nb
    except ImportError:
        _kernels_nb = None
        print("numba unavailable; timing the numpy backend only")

    pairs = len(z) * len(zeta)
    print(f"{pairs} pairs per call (N={args.N}, M={len(z)}), active backend: {_backend.name}")
    print(f"{'kernel':26s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for label, call in cases.items():
        t_np, r_np = best_of(lambda: call(_kernels_np), args.repeat)
        if _kernels_nb is None:
            print(f"{label:26s} {t_np:10.4f}")
            continue
        t_nb, r_nb = best_of(lambda: call(_kernels_nb), args.repeat)
        scale = max(np.max(np.abs(r_np)), 1.0)
        diff = np.max(np.abs(r_np - r_nb)) / scale
        print(f"{label:26s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
