"""Jacobi theta function theta1(v|tau) and its logarithmic companions.

All evaluations reduce the argument into the centred period cell first, sum
the sine series there and then apply the exact transformation factor

    theta1(v_red + m + n*tau) = (-1)**(m+n) * q**(-n**2) * exp(-2j*pi*n*v_red) * theta1(v_red)

so the series only ever sees ``|Im v_red| <= Im(tau)/2``.

Functions accept a scalar or an array for ``v`` and return the same shape.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .lattice import Lattice, reduce_arguments


class ThetaConvergenceError(ArithmeticError):
    """The series did not meet its truncation bound within ``max_terms``."""


class ThetaPoleError(ZeroDivisionError):
    """Argument at (or numerically indistinguishable from) a zero of theta1."""


@dataclass(frozen=True)
class ThetaAccuracy:
    term_tolerance: float = 1e-16
    max_terms: int = 64

    def __post_init__(self):
        if not self.term_tolerance > 0:
            raise ValueError("term_tolerance must be positive")
        if self.max_terms < 4:
            raise ValueError("max_terms must be at least 4")


DEFAULT_ACCURACY = ThetaAccuracy()


@lru_cache(maxsize=64)
def _coeffs_cached(tau: complex, max_terms: int) -> np.ndarray:
    k = np.arange(max_terms)
    c = np.where(k % 2 == 0, 1.0, -1.0) * np.exp(1j * np.pi * tau * (k + 0.5) ** 2)
    c.setflags(write=False)
    return c


def series_coefficients(lattice: Lattice, acc: ThetaAccuracy = DEFAULT_ACCURACY) -> np.ndarray:
    """``(-1)**k * q**((k+1/2)**2)`` for ``k < max_terms``.

    The power is formed as ``exp(i*pi*tau*(k+1/2)**2)`` so that ``q**(1/4)``
    is unambiguous and consistent with the product form.
    """
    return _coeffs_cached(lattice.tau, acc.max_terms)


def _flat(v):
    arr = np.asarray(v, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError("theta argument must be finite")
    return arr, arr.ravel()


def _shape_like(arr, out):
    out = out.reshape(arr.shape)
    return out[()] if arr.ndim == 0 else out


def _check(bad, what):
    if bad:
        raise ThetaConvergenceError(
            f"{what}: {bad} evaluation(s) did not converge; increase max_terms "
            "(|nome| is probably close to 1)"
        )


def _reduced_values(v, lattice, acc):
    arr, flat = _flat(v)
    v_red, m, n = reduce_arguments(flat, lattice)
    k = _backend.kernels
    th, dth, bad = k.theta_reduced(v_red, series_coefficients(lattice, acc), acc.term_tolerance)
    _check(bad, "theta1")
    return arr, v_red, m, n, th, dth


def _factor(v_red, m, n, lattice):
    sign = np.where((m + n) % 2 == 0, 1.0, -1.0)
    return sign * np.exp(-1j * np.pi * lattice.tau * n * n - 2j * np.pi * n * v_red)


def theta1(v, lattice: Lattice, acc: ThetaAccuracy = DEFAULT_ACCURACY):
    arr, v_red, m, n, th, _ = _reduced_values(v, lattice, acc)
    return _shape_like(arr, _factor(v_red, m, n, lattice) * th)


def theta1_prime(v, lattice: Lattice, acc: ThetaAccuracy = DEFAULT_ACCURACY):
    """Derivative of theta1 with respect to ``v``.

    Product rule on the transformation factor gives
    ``factor * (theta1'(v_red) - 2j*pi*n*theta1(v_red))``.
    """
    arr, v_red, m, n, th, dth = _reduced_values(v, lattice, acc)
    return _shape_like(arr, _factor(v_red, m, n, lattice) * (dth - 2j * np.pi * n * th))


def log_abs_theta1(v, lattice: Lattice, acc: ThetaAccuracy = DEFAULT_ACCURACY):
    """``log|theta1(v|tau)|`` without forming theta1 itself (no overflow)."""
    arr, flat = _flat(v)
    out, bad = _backend.kernels.log_abs(
        flat, lattice.tau, series_coefficients(lattice, acc), acc.term_tolerance
    )
    _check(bad, "log|theta1|")
    if not np.all(np.isfinite(out)):
        raise ThetaPoleError("log|theta1| evaluated at a lattice point")
    return _shape_like(arr, out)


def log_deriv_theta1(v, lattice: Lattice, acc: ThetaAccuracy = DEFAULT_ACCURACY):
    """``theta1'(v)/theta1(v)``; shifts by ``-2j*pi`` under ``v -> v + tau``."""
    arr, flat = _flat(v)
    out, bad = _backend.kernels.log_deriv(
        flat, lattice.tau, series_coefficients(lattice, acc), acc.term_tolerance
    )
    _check(bad, "theta1'/theta1")
    if not np.all(np.isfinite(out)):
        raise ThetaPoleError("theta1'/theta1 evaluated at a lattice point")
    return _shape_like(arr, out)


def log_theta1_branch(v_red, m, n, lattice: Lattice, acc: ThetaAccuracy = DEFAULT_ACCURACY):
    """A branch of ``log theta1(v_red + m + n*tau)`` from caller-chosen offsets.

    The principal logarithm is taken at ``v_red`` and the exact logarithm of
    the transformation factor is added:
    ``i*pi*(m+n) - i*pi*tau*n**2 - 2*i*pi*n*(v_red + m)``. With this choice the
    increments under ``m -> m+1`` and ``n -> n+1`` are exactly
    ``i*pi - 2*i*pi*n`` and ``log(-1/q) - 2*i*pi*v``. ``v_red`` need not lie in
    the centred cell, only close enough for the series to converge.
    """
    v_red = np.asarray(v_red, dtype=np.complex128)
    m = np.asarray(m)
    n = np.asarray(n)
    flat = v_red.ravel()
    th, _, bad = _backend.kernels.theta_reduced(
        flat, series_coefficients(lattice, acc), acc.term_tolerance
    )
    _check(bad, "log theta1")
    if np.any(th == 0):
        raise ThetaPoleError("log theta1 evaluated at a lattice point")
    out = np.log(th).reshape(v_red.shape)
    tau = lattice.tau
    out = out + 1j * np.pi * (m + n) - 1j * np.pi * tau * n * n - 2j * np.pi * n * (v_red + m)
    return out[()] if out.ndim == 0 else out


def theta1_product(v, lattice: Lattice, n_factors: int = 40):
    """Product form of theta1, summed directly without argument reduction.

    Independent of the series path; intended for cross-validation at
    moderate arguments.
    """
    v = np.asarray(v, dtype=np.complex128)
    tau = lattice.tau
    out = 2.0 * cmath.exp(1j * math.pi * tau / 4) * np.sin(np.pi * v)
    c2 = np.cos(2 * np.pi * v)
    for k in range(1, n_factors + 1):
        q2k = cmath.exp(2j * math.pi * tau * k)
        out = out * (1 - q2k) * (1 - 2 * q2k * c2 + q2k * q2k)
    return out[()] if out.ndim == 0 else out
