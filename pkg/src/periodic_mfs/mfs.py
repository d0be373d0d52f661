"""Charge placement, the collocation system and evaluation of the flow.

The approximate complex potential is

    f_N(z) = U z - (i/2pi) sum_j Q_j [ log theta1((z - zeta_j)/omega1 | tau) - u_j z ]

with real charges ``Q_j`` summing to zero. Since the charges are real, the
stream function ``Im f_N`` only involves ``log|theta1|`` and never needs a
branch of the complex logarithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import _backend
from .geometry import CircleObstacle, FundamentalRegion, SampleSet
from .lattice import Lattice, reduce_arguments
from .theta import (
    DEFAULT_ACCURACY,
    ThetaAccuracy,
    ThetaConvergenceError,
    ThetaPoleError,
    log_theta1_branch,
    series_coefficients,
)

TWO_PI = 2.0 * math.pi


class SolverError(RuntimeError):
    """The collocation matrix is numerically singular."""

    def __init__(self, message, condition_estimate):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3e})")
        self.condition_estimate = condition_estimate


@dataclass(frozen=True)
class ChargeConfig:
    N: int
    placement_ratio: float
    charge_points: np.ndarray
    collocation_points: np.ndarray
    center: complex = 0j
    radius: float = 1.0


def place_points(obstacle: CircleObstacle, N: int, placement_ratio: float, n_collocation: int | None = None):
    """Equally spaced charges on radius ``ratio*r`` and collocation points on the circle.

    Both rings start on the positive real axis seen from the centre. With
    ``n_collocation > N`` the system becomes an overdetermined least-squares
    problem.
    """
    if N < 4:
        raise ValueError(f"need at least 4 charges, got N={N}")
    if not 0 < placement_ratio < 1:
        raise ValueError(f"placement_ratio must lie in (0, 1), got {placement_ratio}")
    M = N if n_collocation is None else n_collocation
    if M < N:
        raise ValueError("n_collocation must be >= N")
    r = obstacle.radius
    c = complex(obstacle.center)
    zeta = c + placement_ratio * r * np.exp(TWO_PI * 1j * np.arange(N) / N)
    zc = c + r * np.exp(TWO_PI * 1j * np.arange(M) / M)
    return ChargeConfig(N, float(placement_ratio), zeta, zc, c, float(r))


def _ctx(lattice: Lattice, acc: ThetaAccuracy):
    return 1.0 / lattice.omega1, lattice.tau, series_coefficients(lattice, acc), acc.term_tolerance


def _raise_bad(bad, what):
    if bad:
        raise ThetaConvergenceError(f"{what}: {bad} theta evaluation(s) did not converge")


def compute_u(zetas, region: FundamentalRegion, samples: SampleSet, acc: ThetaAccuracy = DEFAULT_ACCURACY):
    """Sample average of ``theta1'/theta1((z - zeta)/omega1) / omega1`` for each charge.

    With points drawn uniformly from the punctured cell the average
    approximates the area integral divided by the cell area.
    """
    pts = np.asarray(samples.points, dtype=np.complex128)
    if len(pts) == 0:
        raise ValueError("empty sample set")
    zetas = np.atleast_1d(np.asarray(zetas, dtype=np.complex128))
    inv_w1, tau, coeffs, tol = _ctx(region.lattice, acc)
    sums, bad = _backend.kernels.pair_log_deriv_sums(pts, zetas, inv_w1, tau, coeffs, tol)
    _raise_bad(bad, "u_j quadrature")
    if not np.all(np.isfinite(sums)):
        raise ThetaPoleError("a sample point coincides with a charge translate")
    return sums * inv_w1 / len(pts)


def compute_uj(zeta: complex, region: FundamentalRegion, samples: SampleSet, acc: ThetaAccuracy = DEFAULT_ACCURACY) -> complex:
    return complex(compute_u([zeta], region, samples, acc)[0])


@dataclass(frozen=True)
class FlowModel:
    lattice: Lattice
    obstacle: CircleObstacle
    region: FundamentalRegion | None
    config: ChargeConfig
    U: float
    Q: np.ndarray
    C: float
    u: np.ndarray
    condition_estimate: float
    residual: float
    quadrature_provenance: dict = field(default_factory=dict)
    accuracy: ThetaAccuracy = DEFAULT_ACCURACY

    @property
    def W(self) -> complex:
        """``sum_j Q_j u_j``, the linear-term coefficient."""
        return complex(np.dot(self.Q, self.u))


def _pivoted_solve(A, b):
    qmat, rmat, perm = scipy.linalg.qr(A, mode="economic", pivoting=True)
    rcond, info = lapack.dtrcon(rmat, norm="1", uplo="U", diag="N")
    cond = math.inf if rcond == 0 else 1.0 / rcond
    if info != 0 or rcond < np.finfo(float).eps:
        raise SolverError("collocation matrix is numerically singular", cond)
    y = scipy.linalg.solve_triangular(rmat, qmat.T @ b)
    x = np.empty_like(y)
    x[perm] = y
    return x, cond


def collocation_matrix(config: ChargeConfig, u, lattice: Lattice, acc: ThetaAccuracy = DEFAULT_ACCURACY):
    """Rows ``-(1/2pi) [log|theta1((z_i - zeta_j)/omega1)| - Re(u_j z_i)]`` (no C column)."""
    zc = np.asarray(config.collocation_points)
    inv_w1, tau, coeffs, tol = _ctx(lattice, acc)
    L, bad = _backend.kernels.pair_log_abs_matrix(zc, config.charge_points, inv_w1, tau, coeffs, tol)
    _raise_bad(bad, "collocation matrix")
    if not np.all(np.isfinite(L)):
        raise ThetaPoleError("collocation point coincides with a charge translate")
    return -(L - np.real(np.asarray(u)[None, :] * zc[:, None])) / TWO_PI


def assemble_and_solve(
    config: ChargeConfig,
    u,
    U: float,
    lattice: Lattice,
    *,
    obstacle: CircleObstacle | None = None,
    region: FundamentalRegion | None = None,
    quadrature_provenance: dict | None = None,
    acc: ThetaAccuracy = DEFAULT_ACCURACY,
) -> FlowModel:
    """Solve for charges ``Q`` and stream constant ``C``.

    Unknowns ``(Q_1..Q_N, C)``; collocation rows enforce ``Im f_N(z_i) = C``
    and the last row ``sum Q_j = 0``. The square system goes through a
    column-pivoted QR factorisation. With more collocation points than
    charges the constraint is eliminated (``Q_N = -sum_{j<N} Q_j``) and the
    rest solved in the least-squares sense.
    """
    u = np.asarray(u, dtype=np.complex128)
    N = config.N
    if u.shape != (N,) or len(config.charge_points) != N:
        raise ValueError(f"dimension mismatch: N={N}, len(u)={u.size}, charges={len(config.charge_points)}")
    zc = np.asarray(config.collocation_points)
    M = len(zc)
    G = collocation_matrix(config, u, lattice, acc)
    rhs = -U * zc.imag
    if M == N:
        A = np.zeros((N + 1, N + 1))
        A[:N, :N] = G
        A[:N, N] = -1.0
        A[N, :N] = 1.0
        b = np.concatenate([rhs, [0.0]])
        x, cond = _pivoted_solve(A, b)
        Q, C = x[:N], float(x[N])
        res = A @ x - b
    else:
        A = np.empty((M, N))
        A[:, : N - 1] = G[:, : N - 1] - G[:, N - 1 : N]
        A[:, N - 1] = -1.0
        y, cond = _pivoted_solve(A, rhs)
        Q = np.append(y[: N - 1], -y[: N - 1].sum())
        C = float(y[N - 1])
        res = np.append(G @ Q - C - rhs, Q.sum())
    scale = abs(U) * config.radius if U != 0 else config.radius
    if obstacle is None:
        obstacle = region.obstacle if region is not None else CircleObstacle(config.radius, config.center)
    return FlowModel(
        lattice=lattice,
        obstacle=obstacle,
        region=region,
        config=config,
        U=float(U),
        Q=Q,
        C=C,
        u=u,
        condition_estimate=float(cond),
        residual=float(np.max(np.abs(res)) / scale),
        quadrature_provenance=dict(quadrature_provenance or {}),
        accuracy=acc,
    )


def solve_flow(
    region: FundamentalRegion,
    N: int,
    placement_ratio: float,
    U: float,
    samples: SampleSet,
    *,
    n_collocation: int | None = None,
    acc: ThetaAccuracy = DEFAULT_ACCURACY,
) -> FlowModel:
    """Place points, integrate the u_j over ``samples`` and solve."""
    config = place_points(region.obstacle, N, placement_ratio, n_collocation)
    u = compute_u(config.charge_points, region, samples, acc)
    return assemble_and_solve(
        config, u, U, region.lattice,
        obstacle=region.obstacle, region=region,
        quadrature_provenance=samples.provenance, acc=acc,
    )


def _points(z):
    arr = np.asarray(z, dtype=np.complex128)
    return arr, np.ascontiguousarray(arr.ravel())


def _out(arr, out):
    out = out.reshape(arr.shape)
    return out[()] if arr.ndim == 0 else out


def eval_stream(model: FlowModel, z):
    """Stream function ``psi = U Im z - (1/2pi) sum Q_j [log|theta1| - Re(u_j z)]``."""
    arr, flat = _points(z)
    inv_w1, tau, coeffs, tol = _ctx(model.lattice, model.accuracy)
    s, bad = _backend.kernels.pair_log_abs_weighted(
        flat, model.config.charge_points, model.Q, inv_w1, tau, coeffs, tol
    )
    _raise_bad(bad, "stream function")
    if not np.all(np.isfinite(s)):
        raise ThetaPoleError("stream function evaluated at a charge translate")
    psi = model.U * flat.imag - (s - np.real(model.W * flat)) / TWO_PI
    return _out(arr, psi)


def eval_velocity(model: FlowModel, z):
    """Complex velocity ``f_N'(z) = u - i v``."""
    arr, flat = _points(z)
    inv_w1, tau, coeffs, tol = _ctx(model.lattice, model.accuracy)
    g, bad = _backend.kernels.pair_log_deriv_weighted(
        flat, model.config.charge_points, model.Q, inv_w1, tau, coeffs, tol
    )
    _raise_bad(bad, "velocity")
    if not np.all(np.isfinite(g)):
        raise ThetaPoleError("velocity evaluated at a charge translate")
    fp = model.U - 1j / TWO_PI * (g * inv_w1 - model.W)
    return _out(arr, fp)


def potential_jumps(model: FlowModel):
    """Closed-form increments ``(f_N(z+omega1) - f_N(z), f_N(z+omega2) - f_N(z))``.

    Both are independent of ``z`` because ``sum Q_j = 0``. Their imaginary
    parts are the stream-function jumps from one obstacle copy to the next.
    """
    lat = model.lattice
    W = model.W
    j1 = lat.omega1 * (model.U + 1j / TWO_PI * W)
    j2 = model.U * lat.omega2 + np.dot(model.Q, model.config.charge_points) / lat.omega1 + 1j / TWO_PI * lat.omega2 * W
    return complex(j1), complex(j2)


def surface_level(model: FlowModel, m: int = 0, n: int = 0) -> float:
    """Value of psi on the obstacle copy centred at ``center + m*omega1 + n*omega2``."""
    j1, j2 = potential_jumps(model)
    return model.C + m * j1.imag + n * j2.imag


def eval_potential(model: FlowModel, z):
    """Complex potential ``f_N(z)`` on one consistent branch.

    ``(z - center)/omega1`` is reduced once and the same lattice offsets are
    used for every charge, so the branch constants enter as
    ``const * sum Q_j = 0``. The imaginary part agrees with
    :func:`eval_stream`, which stays the authoritative stream function.
    """
    arr, flat = _points(z)
    cfg = model.config
    lat = model.lattice
    vc = (flat - cfg.center) / lat.omega1
    vc_red, m, n = reduce_arguments(vc, lat)
    delta = (np.asarray(cfg.charge_points) - cfg.center) / lat.omega1
    w = vc_red[:, None] - delta[None, :]
    logs = log_theta1_branch(w, m[:, None], n[:, None], lat, model.accuracy)
    f = model.U * flat - 1j / TWO_PI * (logs @ model.Q - model.W * flat)
    return _out(arr, f)
