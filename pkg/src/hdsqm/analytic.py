"""Closed-form solutions of the pure model for V = -w^2 X^2/2 - lam X^4/4.

x(t) = x0 cn(W t, m); D1 = sn dn; D2 is the second solution of
D'' = V''(x) D, normalised so that D2(0) = 1, D2'(0) = 0.
"""
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .elliptic import complete_K, jacobi_sncndn

_GL_X, _GL_W = leggauss(48)


class AnalyticDomainError(ValueError):
    pass


@dataclass(frozen=True)
class QuarticSolutionParams:
    alpha: float
    Omega: float
    m: float
    x0: float
    N: float
    omega: float
    lam: float

    @property
    def k(self):
        return math.sqrt(self.m)

    @property
    def K(self):
        return complete_K(self.m)

    @property
    def period(self):
        """Period 4K/Omega of x(t)."""
        return 4.0 * self.K / self.Omega


def quartic_params(omega, lam, N):
    """alpha, Omega, m and x0 for given (omega, lambda, N).

    The forms used for m and x0 are algebraically equal to the textbook
    ones but avoid cancellation when alpha is large.
    """
    if not lam > 0:
        raise AnalyticDomainError("lambda must be positive")
    if not N > 0:
        raise AnalyticDomainError("N must be positive")
    if omega < 0:
        raise AnalyticDomainError("omega must be non-negative")
    lN = lam * N
    alpha = omega**4 / lN
    Omega = (4.0 * lN + omega**4) ** 0.25
    r = math.sqrt(alpha / (4.0 + alpha))
    m = 2.0 / ((4.0 + alpha) * (1.0 + r))  # = (1 - r)/2
    x0 = (N / lam) ** 0.25 * math.sqrt(4.0 / (math.sqrt(4.0 + alpha) + math.sqrt(alpha)))
    return QuarticSolutionParams(alpha, Omega, m, x0, float(N), float(omega), float(lam))


def x_exact(t, P):
    return P.x0 * jacobi_sncndn(np.asarray(t, dtype=float) * P.Omega, P.m)[1]


def xdot_exact(t, P):
    sn, cn, dn = jacobi_sncndn(np.asarray(t, dtype=float) * P.Omega, P.m)
    return -P.x0 * P.Omega * sn * dn


def d1_exact(t, P):
    sn, cn, dn = jacobi_sncndn(np.asarray(t, dtype=float) * P.Omega, P.m)
    return sn * dn


def d1dot_exact(t, P):
    sn, cn, dn = jacobi_sncndn(np.asarray(t, dtype=float) * P.Omega, P.m)
    return P.Omega * cn * (dn * dn - P.m * sn * sn)


def _g_integrand(u, m):
    sn, cn, dn = jacobi_sncndn(u, m)
    return sn * sn + 1.0 / (dn * dn)


def _G_reduced(r, m):
    # integral of sn^2 + 1/dn^2 over [0, r], r in [0, 2K]
    r = np.asarray(r, dtype=float)
    u = 0.5 * r[..., None] * (_GL_X + 1.0)
    return 0.5 * r * np.sum(_GL_W * _g_integrand(u, m), axis=-1)


def G_integral(v, m):
    """G(v) = int_0^v (sn^2 + 1/dn^2) du, using its 2K quasi-periodicity."""
    v = np.asarray(v, dtype=float)
    twoK = 2.0 * complete_K(m)
    j = np.floor(v / twoK)
    r = v - j * twoK
    return j * _G_reduced(np.array(twoK), m) + _G_reduced(r, m)


def d2_exact(t, P):
    """Second solution, regular at the zeros of x'(t).

    Uses 1/(sn^2 dn^2) = -d/dv(cn dn/sn) + m (sn^2 + 1/dn^2), so that
    sn dn * int dv/(sn dn)^2 has the regular form
    -cn dn^2 + m sn dn G(v) up to a multiple of sn dn.
    """
    v = np.asarray(t, dtype=float) * P.Omega
    sn, cn, dn = jacobi_sncndn(v, P.m)
    return cn * dn * dn - P.m * sn * dn * G_integral(v, P.m)


def d2dot_exact(t, P):
    v = np.asarray(t, dtype=float) * P.Omega
    m = P.m
    sn, cn, dn = jacobi_sncndn(v, m)
    G = G_integral(v, m)
    d = (-sn * dn**3 - 2.0 * m * sn * cn * cn * dn
         - m * cn * (dn * dn - m * sn * sn) * G
         - m * sn * dn * (sn * sn + 1.0 / (dn * dn)))
    return P.Omega * d


def wronskian(t, P):
    """D1 D2' - D2 D1'; equals -Omega for the chosen normalisation."""
    return d1_exact(t, P) * d2dot_exact(t, P) - d2_exact(t, P) * d1dot_exact(t, P)


def d_exact(t, P, A=0.0, B=1.0):
    return A * d1_exact(t, P) + B * d2_exact(t, P)


def solD_closed_form(t, Omega):
    """cn(v) - v sn(v) dn(v) at m = 1/2, v = Omega t."""
    v = np.asarray(t, dtype=float) * Omega
    sn, cn, dn = jacobi_sncndn(v, 0.5)
    return cn - v * sn * dn


def analytic_state(t, P, A=0.0, B=1.0):
    """Phase-space point(s) (x, D, p, P) of the closed-form solution."""
    x = x_exact(t, P)
    xd = xdot_exact(t, P)
    D = A * d1_exact(t, P) + B * d2_exact(t, P)
    Dd = A * d1dot_exact(t, P) + B * d2dot_exact(t, P)
    return np.stack(np.broadcast_arrays(x, D, Dd, xd), axis=-1) + 0.0


def energy_from_B(B, lam, N):
    """E = B lam^(1/4) (4N)^(3/4)."""
    if not lam > 0 or not N > 0:
        raise AnalyticDomainError("lambda and N must be positive")
    return B * lam**0.25 * (4.0 * N) ** 0.75


def energy_from_B_general(B, omega, lam, N):
    """E = B x0 Omega^2 for the D2 normalisation used here.

    Coincides with energy_from_B at omega = 0.
    """
    P = quartic_params(omega, lam, N)
    return B * P.x0 * P.Omega**2
