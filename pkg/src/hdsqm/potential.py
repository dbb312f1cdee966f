"""Polynomial superpotentials and bosonic phase-space points."""
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly


@dataclass(frozen=True)
class Potential:
    """V(X) = sum_k coeffs[k] X**k, with analytic derivatives."""

    coeffs: tuple

    def __post_init__(self):
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
        if c.size == 0:
            c = np.zeros(1)
        if not np.all(np.isfinite(c)):
            raise ValueError("potential coefficients must be finite")
        object.__setattr__(self, "coeffs", tuple(float(v) for v in c))

    @classmethod
    def quartic(cls, omega, lam):
        """V = -omega^2 X^2/2 - lam X^4/4."""
        return cls((0.0, 0.0, -0.5 * omega**2, 0.0, -0.25 * lam))

    @classmethod
    def harmonic(cls, omega):
        return cls.quartic(omega, 0.0)

    @classmethod
    def cubic(cls, a=1.0):
        """V = -a X^3/3; unbounded, so the reduced motion escapes."""
        return cls((0.0, 0.0, 0.0, -a / 3.0))

    @classmethod
    def twodot_quadratic(cls, omega):
        """V = omega^3 X^2/2."""
        return cls((0.0, 0.0, 0.5 * omega**3))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def c(self):
        return np.asarray(self.coeffs)

    @property
    def d1(self):
        return npoly.polyder(self.c, 1) if self.degree >= 1 else np.zeros(1)

    @property
    def d2(self):
        return npoly.polyder(self.c, 2) if self.degree >= 2 else np.zeros(1)

    @property
    def d3(self):
        return npoly.polyder(self.c, 3) if self.degree >= 3 else np.zeros(1)

    def V(self, x):
        return npoly.polyval(x, self.c)

    def dV(self, x):
        return npoly.polyval(x, self.d1)

    def d2V(self, x):
        return npoly.polyval(x, self.d2)

    def d3V(self, x):
        return npoly.polyval(x, self.d3)

    @property
    def is_quadratic(self):
        return self.degree <= 2

    @property
    def is_even(self):
        return all(v == 0.0 for v in self.coeffs[1::2])

    def quartic_params(self):
        """(omega, lam) if V has the -w^2 X^2/2 - lam X^4/4 form, else None."""
        c = list(self.coeffs) + [0.0] * (5 - len(self.coeffs))
        if len(c) > 5 or c[0] != 0 or c[1] != 0 or c[3] != 0 or c[2] > 0 or c[4] > 0:
            return None
        return float(np.sqrt(-2.0 * c[2])), -4.0 * c[4]


@dataclass(frozen=True)
class PhaseState:
    """Bosonic phase-space point (x, D, p, P) with p = dD/dt, P = dx/dt."""

    x: float
    D: float
    p: float
    P: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.D, self.p, self.P])):
            raise ValueError("phase state components must be finite")

    def as_array(self):
        return np.array([self.x, self.D, self.p, self.P], dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(*(float(v) for v in a))


@dataclass(frozen=True)
class TwoDotState:
    """State (x, x', x'', x''', D, D') of the two-derivative model."""

    x: float
    x1: float
    x2: float
    x3: float
    D: float
    D1: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("state components must be finite")

    def as_array(self):
        return np.array([self.x, self.x1, self.x2, self.x3, self.D, self.D1], dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(*(float(v) for v in a))
