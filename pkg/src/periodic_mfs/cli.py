"""Command-line entry point: ``periodic-mfs {solve,sweep,field}``.

Exit status: 0 on success, 2 for an invalid configuration or arguments, 3
when the solver fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from . import __version__
from .config import ConfigError, ProblemConfig, load_config, write_atomic
from .diagnostics import FitError, boundary_error, convergence_sweep, fit_decay_rate
from .field import eval_grid, extract_streamlines, render_svg, write_field_csv
from .mfs import SolverError, solve_flow
from .theta import ThetaConvergenceError, ThetaPoleError

log = logging.getLogger("periodic_mfs")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

SOLVER_ERRORS = (SolverError, ThetaConvergenceError, ThetaPoleError, FitError)


def _pairs(values):
    return [[float(v.real), float(v.imag)] for v in np.asarray(values)]


def _provenance(cfg: ProblemConfig, **extra) -> dict:
    d = {"config": cfg.to_dict(), "version": __version__}
    d.update(extra)
    return d


def _solve(cfg: ProblemConfig):
    region = cfg.region()
    samples = cfg.samples(region)
    model = solve_flow(region, cfg.N, cfg.placement_ratio, cfg.U, samples)
    return region, model


def cmd_solve(config_path, output_path) -> int:
    cfg = load_config(config_path)
    log.info("resolved config: %s", json.dumps(cfg.to_dict()))
    _, model = _solve(cfg)
    eps = boundary_error(model)
    doc = {
        "Q": [float(q) for q in model.Q],
        "C": model.C,
        "u": _pairs(model.u),
        "charge_sum": float(np.sum(model.Q)),
        "condition_estimate": model.condition_estimate,
        "residual": model.residual,
        "epsilon": eps,
        "charge_points": _pairs(model.config.charge_points),
        "collocation_points": _pairs(model.config.collocation_points),
        "provenance": _provenance(cfg, quadrature=model.quadrature_provenance),
    }
    write_atomic(output_path, json.dumps(doc, indent=2) + "\n")
    log.info("N=%d epsilon=%.3e cond=%.3e -> %s", cfg.N, eps, model.condition_estimate, output_path)
    return EXIT_OK


def _fmt(x):
    return "" if x is None or not np.isfinite(x) else repr(float(x))


def cmd_sweep(config_path, N_list, ratios, output_csv) -> int:
    cfg = load_config(config_path)
    N_list = sorted(set(int(n) for n in N_list))
    ratios = [float(r) for r in ratios]
    for n in N_list:
        if n < 4:
            raise ConfigError(f"N values must be at least 4, got {n}")
    for q in ratios:
        if not 0 < q < 1:
            raise ConfigError(f"ratios must lie strictly between 0 and 1, got {q}")
    region = cfg.region()
    samples = cfg.samples(region)
    rows = []
    any_ok = False
    fits = {}
    for q in ratios:
        records = convergence_sweep(region, N_list, q, samples, U=cfg.U)
        any_ok |= any(r.ok for r in records)
        try:
            fits[q] = fit_decay_rate(records)
        except FitError as exc:
            log.warning("ratio %s: %s", q, exc)
            fits[q] = None
        rate = fits[q].rate if fits[q] is not None else None
        for rec in records:
            rows.append([repr(q), str(rec.N), _fmt(rec.epsilon), _fmt(rec.condition_estimate), _fmt(rate)])
        log.info("ratio %s: fitted rate %s", q, _fmt(rate) or "n/a")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ratio", "N", "epsilon", "cond_estimate", "fitted_rate"])
    w.writerows(rows)
    write_atomic(output_csv, buf.getvalue())
    meta = _provenance(
        cfg, N_list=N_list, ratios=ratios, quadrature=samples.provenance,
        fits={repr(q): (None if f is None else {"rate": f.rate, "amplitude": f.amplitude, "fit_range": list(f.fit_range)})
              for q, f in fits.items()},
    )
    write_atomic(str(output_csv) + ".json", json.dumps(meta, indent=2) + "\n")
    return EXIT_OK if any_ok else EXIT_SOLVER


def default_window(cfg: ProblemConfig):
    """Bounding box (units of r) of two periods in each direction around the obstacle."""
    w1, w2 = cfg.omega1, cfg.omega2
    pts = [a * w1 + b * w2 for a in (-0.5, 1.5) for b in (-0.5, 1.5)]
    xs = [p.real for p in pts]
    ys = [p.imag for p in pts]
    return (min(xs), max(xs), min(ys), max(ys))


def cmd_field(config_path, window, nx, ny, levels, svg_path, csv_path) -> int:
    cfg = load_config(config_path)
    if window is None:
        window = default_window(cfg)
    window = tuple(float(w) for w in window)
    if not (window[1] > window[0] and window[3] > window[2]):
        raise ConfigError(f"window must satisfy x_min < x_max and y_min < y_max, got {window}")
    if nx < 2 or ny < 2:
        raise ConfigError("nx and ny must be at least 2")
    if levels < 1:
        raise ConfigError("levels must be at least 1")
    region, model = _solve(cfg)
    grid = eval_grid(model, window, nx, ny)
    lines = extract_streamlines(grid, levels, region)
    meta = _provenance(cfg, window=list(window), nx=nx, ny=ny, levels=levels, quadrature=model.quadrature_provenance)
    if svg_path:
        write_atomic(svg_path, render_svg(lines, region, window, metadata=meta))
    if csv_path:
        write_atomic(csv_path, write_field_csv(grid))
        write_atomic(str(csv_path) + ".json", json.dumps(meta, indent=2) + "\n")
    log.info("%d polylines over %d levels", len(lines), len(lines.levels))
    return EXIT_OK


def _ints(text):
    """``16,24,32`` or ``16:64:8`` (inclusive stop)."""
    if ":" in text:
        start, stop, step = (int(t) for t in text.split(":"))
        return list(range(start, stop + 1, step))
    return [int(t) for t in text.split(",") if t]


def _floats(text):
    return [float(t) for t in text.split(",") if t]


def build_parser():
    p = argparse.ArgumentParser(prog="periodic-mfs", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one configuration and write a JSON solution")
    s.add_argument("config")
    s.add_argument("-o", "--output", required=True)

    s = sub.add_parser("sweep", help="epsilon_N over N for several placement ratios")
    s.add_argument("config")
    s.add_argument("--N", dest="n_list", type=_ints, default=list(range(16, 65, 8)), help="e.g. 16:64:8 or 16,32,64")
    s.add_argument("--ratios", type=_floats, default=None, help="e.g. 0.4,0.5,0.6,0.7 (default: config value)")
    s.add_argument("-o", "--output", required=True)

    s = sub.add_parser("field", help="stream function grid, streamline SVG and field CSV")
    s.add_argument("config")
    s.add_argument("--window", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"), default=None,
                   help="in units of r (default: two periods each way)")
    s.add_argument("--nx", type=int, default=400)
    s.add_argument("--ny", type=int, default=400)
    s.add_argument("--levels", type=int, default=30)
    s.add_argument("--svg")
    s.add_argument("--csv")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.output)
        if args.command == "sweep":
            ratios = args.ratios
            if ratios is None:
                ratios = [load_config(args.config).placement_ratio]
            return cmd_sweep(args.config, args.n_list, ratios, args.output)
        return cmd_field(args.config, args.window, args.nx, args.ny, args.levels, args.svg, args.csv)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
