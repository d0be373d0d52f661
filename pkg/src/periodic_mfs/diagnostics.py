"""Boundary error, decay-rate fits, mean velocity and convergence sweeps."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import FundamentalRegion, SampleSet
from .mfs import FlowModel, eval_stream, eval_velocity, solve_flow

log = logging.getLogger(__name__)

# Boundary errors at or below this are treated as rounding-floor saturated.
DEFAULT_FLOOR = 1e-13


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ConvergenceRecord:
    N: int
    epsilon: float
    condition_estimate: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and math.isfinite(self.epsilon)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    amplitude: float
    fit_range: tuple


@dataclass(frozen=True)
class AverageVelocity:
    """Mean velocity over a sample set divided by ``U``, with standard errors."""

    u: float
    v: float
    stderr_u: float
    stderr_v: float
    count: int


def boundary_points(model: FlowModel, samples_per_unknown: int = 16):
    """Equally spaced points on the obstacle circle, offset half a step from angle 0."""
    cfg = model.config
    K = samples_per_unknown * cfg.N
    theta = 2 * np.pi * (np.arange(K) + 0.5) / K
    return cfg.center + cfg.radius * np.exp(1j * theta)


def boundary_error(model: FlowModel, samples_per_unknown: int = 16) -> float:
    """``max |psi(z) - C| / (U r)`` over ``samples_per_unknown * N`` boundary points.

    The points sit halfway between fine-grid angles, so none of them
    coincides with a collocation point.
    """
    if samples_per_unknown < 4:
        raise ValueError("samples_per_unknown must be at least 4")
    zb = boundary_points(model, samples_per_unknown)
    scale = abs(model.U) * model.config.radius
    return float(np.max(np.abs(eval_stream(model, zb) - model.C)) / scale)


def usable_records(records, floor: float = DEFAULT_FLOOR):
    """Records on the geometric part of the curve, in ascending N.

    A record is dropped when it failed, when its epsilon is at or below
    ``floor``, or once epsilon stops decreasing (the rounding plateau).
    """
    out = []
    for rec in sorted(records, key=lambda r: r.N):
        if not rec.ok or rec.epsilon <= floor:
            continue
        if out and rec.epsilon >= out[-1].epsilon:
            break
        out.append(rec)
    return out


def fit_decay_rate(records, floor: float = DEFAULT_FLOOR) -> DecayFit:
    """Least-squares line through ``(N, log epsilon)``; the rate is ``exp(slope)``."""
    use = usable_records(records, floor)
    if len(use) < 3:
        raise FitError(f"need at least 3 records above the rounding floor, have {len(use)}")
    N = np.array([r.N for r in use], dtype=float)
    y = np.log([r.epsilon for r in use])
    slope, intercept = np.polyfit(N, y, 1)
    return DecayFit(float(np.exp(slope)), float(np.exp(intercept)), tuple(int(n) for n in N))


def average_velocity(model: FlowModel, samples: SampleSet) -> AverageVelocity:
    pts = np.asarray(samples.points)
    if len(pts) == 0:
        raise ValueError("empty sample set")
    fp = eval_velocity(model, pts) / model.U
    mean = fp.mean()
    n = len(fp)
    se_u = float(fp.real.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    se_v = float(fp.imag.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return AverageVelocity(float(mean.real), float(-mean.imag), se_u, se_v, n)


def convergence_sweep(
    region: FundamentalRegion,
    N_list,
    placement_ratio: float,
    samples: SampleSet,
    U: float = 1.0,
    samples_per_unknown: int = 16,
):
    """Solve and measure epsilon for each N. Failures are recorded, not raised.

    Every N gets fresh charge points while the u_j quadrature reuses the
    one shared sample set.
    """
    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be strictly ascending")
    out = []
    for N in N_list:
        try:
            model = solve_flow(region, N, placement_ratio, U, samples)
            eps = boundary_error(model, samples_per_unknown)
            out.append(ConvergenceRecord(N, eps, model.condition_estimate))
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            log.warning("sweep cell ratio=%s N=%d failed: %s", placement_ratio, N, exc)
            cond = getattr(exc, "condition_estimate", math.nan)
            out.append(ConvergenceRecord(N, math.nan, cond, str(exc)))
    return out
