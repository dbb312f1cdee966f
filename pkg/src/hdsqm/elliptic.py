"""Jacobi elliptic functions and first-kind elliptic integrals.

All public functions take the parameter ``m = k**2``.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import elliprf

from ._backend import kernels


class EllipticDomainError(ValueError):
    """Raised for a parameter or argument outside the supported domain."""


@dataclass(frozen=True)
class EllipticParameter:
    """Parameter m = k^2, restricted to 0 <= m < 1."""

    m: float

    def __post_init__(self):
        check_m(self.m)

    @property
    def k(self):
        return math.sqrt(self.m)


def check_m(m):
    m = float(m.m if isinstance(m, EllipticParameter) else m)
    if not (0.0 <= m < 1.0) or math.isnan(m):
        raise EllipticDomainError(f"parameter m={m!r} outside [0, 1)")
    return m


def complete_K(m):
    """K(m) by the arithmetic-geometric mean: K = pi / (2 agm(1, sqrt(1-m)))."""
    m = check_m(m)
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


def incomplete_F(phi, m):
    """F(phi | m) for any real phi, via Carlson's R_F and quasi-periodicity.

    F(phi + j*pi) = F(phi) + 2 j K.
    """
    m = check_m(m)
    phi = np.asarray(phi, dtype=float)
    j = np.round(phi / math.pi)
    r = phi - j * math.pi  # |r| <= pi/2
    s, c = np.sin(r), np.cos(r)
    out = s * elliprf(c * c, 1.0 - m * s * s, 1.0) + 2.0 * j * complete_K(m)
    return out if out.ndim else float(out)


def jacobi_sncndn(u, m):
    """Return (sn, cn, dn) at u for parameter m."""
    m = check_m(m)
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise EllipticDomainError("argument u must be finite")
    sn, cn, dn = kernels.sncndn(u, m)
    if u.ndim == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def jacobi_arccn(v, m):
    """Principal inverse of cn: u in [0, 2K] with cn(u, m) = v."""
    m = check_m(m)
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v) > 1.0):
        raise EllipticDomainError("arccn needs |v| <= 1")
    return incomplete_F(np.arccos(v), m)
