"""Action-angle variables of the reduced flow x' = P, P' = V'(x) and the
quantization condition E_n = n sigma(N)."""
import csv
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import quad
from scipy.optimize import brentq

from . import _backend
from ._backend import kernels
from .analytic import quartic_params
from .elliptic import complete_K, jacobi_sncndn
from .potential import Potential


class UnboundedOrbitError(ValueError):
    """The level set N + V(x) = 0 does not bracket a bounded orbit."""


class UnsupportedChartError(ValueError):
    pass


@dataclass(frozen=True)
class ActionAngleChart:
    I: float
    phi: float
    sigma: float
    N: float


def _well_center(V):
    """Location of the minimum of -V (the bottom of the reduced potential well)."""
    crit = npoly.polyroots(V.d1) if V.degree >= 2 else np.array([0.0])
    crit = crit[np.abs(crit.imag) < 1e-12].real
    if crit.size == 0:
        raise UnboundedOrbitError("potential has no critical point")
    return float(crit[np.argmax(V.V(crit))])


def turning_points(N, V):
    """Turning points x- < c < x+ of the orbit N + V(x) = 0 around the well bottom c."""
    c = _well_center(V)
    f = lambda x: N + V.V(x)
    if f(c) <= 0:
        raise UnboundedOrbitError(f"N={N} lies below the bottom of the well")
    pts = []
    for sgn in (-1.0, 1.0):
        step = 1.0
        for _ in range(200):
            if f(c + sgn * step) < 0:
                break
            step *= 2.0
        else:
            raise UnboundedOrbitError("no turning point: -V is not confining")
        a, b = sorted((c, c + sgn * step))
        pts.append(brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return pts[0], pts[1]


def _quotient(N, V, xm, xp):
    """Q with N + V(x) = (xp - x)(x - xm) Q(x)."""
    num = V.c.copy()
    num[0] += N
    den = npoly.polymul([-xp, 1.0], [-xm, 1.0]) * -1.0
    q, _ = npoly.polydiv(num, den)
    return q


def _orbit_integrals(N, V):
    xm, xp = turning_points(N, V)
    a, b = 0.5 * (xp + xm), 0.5 * (xp - xm)
    q = _quotient(N, V, xm, xp)

    def Q(th):
        return max(npoly.polyval(a + b * math.cos(th), q), 0.0)

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    area = quad(lambda th: b * b * math.sin(th) ** 2 * math.sqrt(2.0 * Q(th)), 0.0, math.pi, **opts)[0]
    period = quad(lambda th: 2.0 / math.sqrt(2.0 * Q(th)), 0.0, math.pi, **opts)[0]
    return area / math.pi, period


def action_I(N, V):
    """I = (1/2pi) * enclosed area of the orbit P^2/2 - V(x) = N."""
    return _orbit_integrals(N, V)[0]


def orbit_period(N, V):
    """Period 2 * int dx / sqrt(2 (N + V)) by quadrature."""
    return _orbit_integrals(N, V)[1]


def orbit_period_numeric(N, V, rtol=1e-13, atol=1e-14):
    """Period of the reduced orbit from direct integration of x' = P, P' = V'(x).

    Starts at the right turning point and locates the next two zeros of P.
    """
    xm, xp = turning_points(N, V)
    est = orbit_period(N, V)
    d1 = V.d1
    d2 = np.zeros(1)
    ts, ys, hs, status, _ = kernels.dopri5(_backend.REDUCED, d1, d2, 0.0, np.array([xp, 0.0]),
                                           0.0, 1.3 * est, rtol, atol, 1e-3, 1e12, 10**7)
    P = ys[:, 1]
    crossings = []
    for i in range(1, len(P) - 1):
        if P[i] < 0 <= P[i + 1] or P[i] > 0 >= P[i + 1]:
            step = lambda s: kernels.dp5_step(_backend.REDUCED, d1, d2, 0.0, ys[i], s)[0][1]
            crossings.append(ts[i] + brentq(step, 0.0, ts[i + 1] - ts[i], xtol=1e-15, rtol=1e-15))
    if len(crossings) < 2:
        raise UnboundedOrbitError("orbit did not close")
    return crossings[1]


def sigma_of_N(omega, lam, N):
    """sigma = pi Omega / (2 K(m)); the harmonic case lam = 0 gives omega."""
    if lam == 0:
        if not N > 0:
            raise ValueError("N must be positive")
        return float(omega)
    P = quartic_params(omega, lam, N)
    return math.pi * P.Omega / (2.0 * complete_K(P.m))


def sigma_numeric(N, V):
    return 2.0 * math.pi / orbit_period_numeric(N, V)


def sigma_from_action(N, V, rel_step=1e-4):
    """dN/dI by a fourth-order central difference of action_I."""
    h = rel_step * N
    d = (-action_I(N + 2 * h, V) + 8 * action_I(N + h, V)
         - 8 * action_I(N - h, V) + action_I(N - 2 * h, V)) / (12 * h)
    return 1.0 / d


def N_of_I_quartic(I, lam=1.0):
    """Inverse of I(N) = 4 sqrt(2) K(1/2)/(3 pi) N^(3/4) lam^(-1/4) at omega = 0."""
    if not I > 0:
        raise ValueError("action must be positive")
    c = 4.0 * math.sqrt(2.0) * complete_K(0.5) / (3.0 * math.pi)
    return (I * lam**0.25 / c) ** (4.0 / 3.0)


def angle_chart(I, phi, omega=0.0, lam=1.0):
    """(x, P) of the action-angle chart for the omega = 0 quartic well.

    x = x0(I) cn(2K phi/pi), P = dx/dt with phi' = sigma(I).
    """
    if omega != 0.0:
        raise UnsupportedChartError("explicit chart is available for omega = 0 only")
    N = N_of_I_quartic(I, lam)
    P = quartic_params(0.0, lam, N)
    K = complete_K(P.m)
    sn, cn, dn = jacobi_sncndn(np.asarray(phi, dtype=float) * 2.0 * K / math.pi, P.m)
    return P.x0 * cn, -P.x0 * P.Omega * sn * dn


def chart_state(I, phi, lam=1.0):
    N = N_of_I_quartic(I, lam)
    return ActionAngleChart(float(I), float(np.mod(phi, 2 * math.pi)), sigma_of_N(0.0, lam, N), N)


def quantized_levels(omega, lam, N, n_set):
    """E_n = n sigma(N) for each n in n_set."""
    s = sigma_of_N(omega, lam, N)
    return np.array([n * s for n in n_set], dtype=float)


def continuum_level_set(omega, lam, N, n_max):
    """Levels E_n = n sigma(N), |n| <= n_max, at fixed N as a LevelSet.

    For lam > 0 the bands n sigma(N), N > 0, fill |E| >= omega (|n| >= 1)
    while n = 0 gives the isolated point E = 0; that row is kept explicitly
    and recorded in meta.
    """
    from .spectra import LevelSet
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    n = np.arange(-n_max, n_max + 1)
    E = quantized_levels(omega, lam, N, n)
    meta = {"N": float(N), "omega": float(omega), "lambda": float(lam)}
    if lam > 0:
        meta["isolated"] = [0.0]
        meta["band_edge"] = float(omega)
    return LevelSet(E, np.maximum(n, 0), np.maximum(-n, 0), np.ones_like(n),
                    {"n_max": int(n_max)}, meta)


def is_quantized(E, omega, lam, N, tol=1e-9):
    s = sigma_of_N(omega, lam, N)
    n = round(E / s)
    return abs(E - n * s) <= tol * max(1.0, abs(E))


def e1_curve(omega, lam, N_values):
    return np.array([sigma_of_N(omega, lam, N) for N in N_values])


def write_e1_csv(fh, curves):
    """curves: mapping label -> (omega, lam, N array)."""
    w = csv.writer(fh)
    w.writerow(["omega", "lambda", "N", "E1"])
    for omega, lam, Ns in curves:
        for N, E in zip(Ns, e1_curve(omega, lam, Ns)):
            w.writerow([repr(float(omega)), repr(float(lam)), repr(float(N)), repr(float(E))])


def sigma_asymptotic_exponent(ell, V=None, I_range=(1e3, 1e6), n_fit=16):
    """Exact large-I exponent (ell-1)/(ell+1) of sigma(I) and a log-log fit.

    V defaults to -X^(2 ell)/(2 ell). Returns (exact, fitted).
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if V is None:
        c = np.zeros(2 * ell + 1)
        c[-1] = -1.0 / (2 * ell)
        V = Potential(tuple(c))
    if V.degree != 2 * ell or V.coeffs[-1] >= 0:
        raise ValueError("V must have degree 2 ell and negative leading coefficient")
    exact = (ell - 1) / (ell + 1)
    logN = lambda I: brentq(lambda u: math.log(action_I(math.exp(u), V)) - math.log(I), -50, 50,
                            xtol=1e-12)
    u = np.linspace(logN(I_range[0]), logN(I_range[1]), n_fit)
    Is, sig = [], []
    for ui in u:
        I, T = _orbit_integrals(math.exp(ui), V)
        Is.append(I)
        sig.append(2 * math.pi / T)
    if np.any(np.diff(sig) < 0) and ell >= 2:
        raise ValueError("sigma not monotone over the fit range")
    slope = float(np.polyfit(np.log(Is), np.log(sig), 1)[0])
    return exact, slope
