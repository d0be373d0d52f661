"""Period lattice, nome and pseudo-periodic argument reduction."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    """Periods ``omega1``, ``omega2`` of the obstacle array.

    ``tau = omega2/omega1`` lies in the upper half plane and
    ``nome = exp(i*pi*tau)``.
    """

    omega1: complex
    omega2: complex
    tau: complex
    nome: complex

    @property
    def cell_area(self) -> float:
        """Area of the period parallelogram spanned by ``omega1``, ``omega2``."""
        return abs((self.omega1.conjugate() * self.omega2).imag)

    def point(self, m, n):
        return m * self.omega1 + n * self.omega2

    def coordinates(self, z):
        """Real coordinates ``(a, b)`` with ``z = a*omega1 + b*omega2``."""
        z = np.asarray(z)
        area = (self.omega1.conjugate() * self.omega2).imag
        a = (self.omega2.conjugate() * z).imag / -area
        b = (self.omega1.conjugate() * z).imag / area
        return a, b


@dataclass(frozen=True)
class ReducedArgument:
    v_red: complex
    m: int
    n: int


def make_lattice(omega1: complex, omega2: complex) -> Lattice:
    omega1 = complex(omega1)
    omega2 = complex(omega2)
    if omega1 == 0:
        raise LatticeError("omega1 must be nonzero")
    if not (cmath.isfinite(omega1) and cmath.isfinite(omega2)):
        raise LatticeError("periods must be finite")
    tau = omega2 / omega1
    if not tau.imag > 0:
        raise LatticeError(
            f"Im(omega2/omega1) must be positive, got tau = {tau!r}; "
            "swap or negate omega2 to orient the lattice"
        )
    return Lattice(omega1, omega2, tau, cmath.exp(1j * math.pi * tau))


def reduce_argument(v: complex, lattice: Lattice) -> ReducedArgument:
    """Write ``v = v_red + m + n*tau`` with ``v_red`` in the centred cell.

    In coordinates ``v_red = a + b*tau`` both ``a`` and ``b`` land in
    ``[-1/2, 1/2)``; ties at the half-boundaries go through ``floor(x + 1/2)``.
    """
    v = complex(v)
    if not cmath.isfinite(v):
        raise ValueError(f"non-finite argument {v!r}")
    tau = lattice.tau
    b = v.imag / tau.imag
    a = v.real - b * tau.real
    n = math.floor(b + 0.5)
    m = math.floor(a + 0.5)
    v_red = complex(v.real - m - n * tau.real, v.imag - n * tau.imag)
    return ReducedArgument(v_red, m, n)


def reduce_arguments(v, lattice: Lattice):
    """Array version of :func:`reduce_argument` returning ``(v_red, m, n)``."""
    v = np.asarray(v, dtype=np.complex128)
    tau = lattice.tau
    b = v.imag / tau.imag
    a = v.real - b * tau.real
    n = np.floor(b + 0.5)
    m = np.floor(a + 0.5)
    v_red = (v.real - m - n * tau.real) + 1j * (v.imag - n * tau.imag)
    return v_red, m.astype(np.int64), n.astype(np.int64)
