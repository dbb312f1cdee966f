"""Continuum eigenfunctions of H_B = -d^2/dx dD - D V'(x), zero modes,
characteristics evolution, fermion-sector states and the regularized
x^(-3/2) integral."""
import csv
import math
import struct
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.interpolate import RectBivariateSpline

from ._backend import kernels
from .actionangle import is_quantized, sigma_numeric, sigma_of_N, turning_points
from .analytic import quartic_params
from .elliptic import complete_K, jacobi_arccn


class ForbiddenRegionError(ValueError):
    """N + V(x) <= 0: outside the classically allowed region."""


class SupportEscapeError(RuntimeError):
    """The pulled-back grid leaves the region where the initial data is known."""


class FitQualityError(ValueError):
    pass


# --- eigen data ---------------------------------------------------------------

@dataclass(frozen=True)
class EigenData:
    E: float
    N: float
    quantized: bool = False


def eigen_data(E, N, V, tol=1e-9):
    """EigenData with the quantized flag E = n sigma(N) evaluated for V."""
    qp = V.quartic_params()
    if qp is not None:
        omega, lam = qp
        flag = is_quantized(E, omega, lam, N, tol)
    else:
        s = sigma_numeric(N, V)
        flag = abs(E - round(E / s) * s) <= tol * max(1.0, abs(E))
    return EigenData(float(E), float(N), bool(flag))


def quantized_eigen_data(n, N, V):
    qp = V.quartic_params()
    s = sigma_numeric(N, V) if qp is None else sigma_of_N(qp[0], qp[1], N)
    return EigenData(n * s, float(N), True)


def _orbit(V, N):
    """(x0, Omega, m) of the quartic family, including the harmonic lam = 0 case."""
    qp = V.quartic_params()
    if qp is None:
        raise ValueError("closed-form phase needs V = -w^2 X^2/2 - lam X^4/4")
    omega, lam = qp
    if lam == 0:
        if omega <= 0:
            raise ValueError("degenerate potential")
        return math.sqrt(2 * N) / omega, omega, 0.0
    P = quartic_params(omega, lam, N)
    return P.x0, P.Omega, P.m


# --- action function and eigenfunctions --------------------------------------

def _k(x, e, V):
    w = e.N + V.V(np.asarray(x, dtype=float))
    return w


def action_function_S(x, D, e, V, form="arccn", branch=0):
    """S = D sqrt(2(N+V)) + (E/sqrt2) int^x dy/sqrt(N+V(y)).

    form='arccn' uses -(E/Omega) arccn(x/x0) (the quartic closed form, which
    differs from the x = 0 based integral by the constant E K/Omega); branch
    adds 4K per unit to the arccn value. form='quad' integrates from 0.
    """
    x = np.asarray(x, dtype=float)
    D = np.asarray(D, dtype=float)
    w = _k(x, e, V)
    if np.any(w <= 0):
        raise ForbiddenRegionError("N + V(x) <= 0")
    first = D * np.sqrt(2.0 * w)
    if e.E == 0:
        return first
    if form == "arccn":
        x0, Om, m = _orbit(V, e.N)
        u = jacobi_arccn(np.clip(x / x0, -1.0, 1.0), m) + 4.0 * complete_K(m) * branch
        return first - e.E / Om * u
    if form == "quad":
        f = lambda y: 1.0 / math.sqrt(e.N + V.V(y))
        vals = np.vectorize(lambda xv: quad(f, 0.0, xv, epsabs=1e-14, epsrel=1e-13, limit=200)[0])(x)
        return first + e.E / math.sqrt(2.0) * vals
    raise ValueError(f"unknown form {form!r}")


def dS_dD(x, e, V):
    w = _k(x, e, V)
    if np.any(w <= 0):
        raise ForbiddenRegionError("N + V(x) <= 0")
    return np.sqrt(2.0 * w)


def fd_coefficients(order=8):
    """Central first-derivative weights on offsets -order/2..order/2."""
    n = order // 2
    offs = np.arange(-n, n + 1)
    A = np.vander(offs, increasing=True).T.astype(float)
    b = np.zeros(len(offs))
    b[1] = 1.0
    return offs, np.linalg.solve(A, b)


_OFF8, _W8 = fd_coefficients(8)
_OFF4, _W4 = fd_coefficients(4)


def d_dx(f, x, h, order=8):
    offs, w = (_OFF8, _W8) if order == 8 else (_OFF4, _W4)
    return sum(wi * f(x + oi * h) for oi, wi in zip(offs, w) if wi != 0) / h


def hj_residuals(x, D, e, V, h=None):
    """Residuals of S_D S_x - D V' - E = 0 and S_D^2/2 - V - N = 0.

    S_D is analytic; S_x uses an eighth-order central difference with a
    step scaled to the distance from the nearest turning point.
    """
    x = np.asarray(x, dtype=float)
    D = np.asarray(D, dtype=float)
    xm, xp = turning_points(e.N, V)
    dist = np.minimum(x - xm, xp - x)
    if np.any(dist <= 0):
        raise ForbiddenRegionError("point outside the allowed region")
    hh = np.minimum(1e-3, dist / 20.0) if h is None else h
    SD = dS_dD(x, e, V)
    Sx = d_dx(lambda xx: action_function_S(xx, D, e, V), x, hh)
    r1 = SD * Sx - D * V.dV(x) - e.E
    r2 = 0.5 * SD**2 - V.V(x) - e.N
    return r1, r2


def allowed(x, e, V):
    return _k(x, e, V) > 0


def psi_EN(x, D, e, V, branch=0):
    """Psi = exp(iS)/sqrt(N + V(x)) in the allowed region; 0 (and flagged) elsewhere.

    Returns (values, singular_mask) where the mask marks points outside the
    open allowed region.
    """
    x, D = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(D, dtype=float))
    w = _k(x, e, V)
    ok = w > 0
    out = np.zeros(x.shape, dtype=complex)
    if np.any(ok):
        S = action_function_S(x[ok], D[ok], e, V, branch=branch)
        out[ok] = np.exp(1j * S) / np.sqrt(w[ok])
    return out, ~ok


def psi_value(x, D, e, V, branch=0):
    v, bad = psi_EN(x, D, e, V, branch)
    if np.any(bad):
        raise ForbiddenRegionError("point outside the allowed region")
    return v


def dpsi_dx(x, D, e, V):
    """Analytic x-derivative: [-V'/(2(N+V)) + i(D V' + E)/sqrt(2(N+V))] Psi."""
    w = _k(x, e, V)
    psi = psi_value(x, D, e, V)
    return (-V.dV(x) / (2 * w) + 1j * (D * V.dV(x) + e.E) / np.sqrt(2 * w)) * psi


def single_valuedness_mismatch(x, D, e, V):
    """|Psi(branch + 1) - Psi(branch)| / |Psi| at the given points."""
    a = psi_value(x, D, e, V, 0)
    b = psi_value(x, D, e, V, 1)
    return float(np.max(np.abs(b - a) / np.abs(a)))


def apply_HB(f, x, D, V, h=1e-2):
    """H_B f = -f_xD - D V'(x) f by a tensor fourth-order stencil."""
    x = np.asarray(x, dtype=float)
    D = np.asarray(D, dtype=float)
    fxd = 0.0
    for oi, wi in zip(_OFF4, _W4):
        if wi == 0:
            continue
        for oj, wj in zip(_OFF4, _W4):
            if wj == 0:
                continue
            fxd = fxd + wi * wj * f(x + oi * h, D + oj * h)
    fxd = fxd / (h * h)
    return -fxd - D * V.dV(x) * f(x, D)


def hb_relative_residual(x, D, e, V, h=1e-3):
    f = lambda xx, dd: psi_value(xx, dd, e, V)
    return np.abs(apply_HB(f, x, D, V, h) - e.E * f(x, D)) / np.abs(f(x, D))


# --- zero modes -------------------------------------------------------------------

def zero_mode(x, D, gtilde, V, tail=1e-14):
    """Psi0 = (2 pi)^(-1/2) int gtilde(P^2/2 - V(x)) exp(iPD) dP.

    The integrand is even in P, so this is a cosine transform on [0, Pmax],
    with Pmax where gtilde falls below ``tail`` times its value at P = 0.
    """
    x, D = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(D, dtype=float))
    out = np.empty(x.shape)
    for idx in np.ndindex(x.shape):
        xi, di = x[idx], D[idx]
        Vx = float(V.V(xi))
        g = lambda P: gtilde(0.5 * P * P - Vx)
        peak = max(abs(g(P)) for P in np.linspace(0.0, 10.0, 101))
        Pmax = 1.0
        while abs(g(Pmax)) > tail * peak or abs(g(2 * Pmax)) > tail * peak:
            Pmax *= 2.0
            if Pmax > 1e6:
                raise ValueError("gtilde does not decay")
        opts = dict(epsabs=1e-14 * peak, epsrel=1e-12, limit=400)
        if di == 0:
            val = quad(g, 0.0, Pmax, **opts)[0]
        else:
            val = quad(g, 0.0, Pmax, weight="cos", wvar=abs(di), **opts)[0]
        out[idx] = 2.0 * val / math.sqrt(2.0 * math.pi)
    return out if out.ndim else float(out)


def gtilde_k(k):
    return lambda N: N**k * math.exp(-N)


def zero_mode_gaussian(x, D, V):
    """Closed form for gtilde = exp(-N): exp(V(x) - D^2/2)."""
    return np.exp(V.V(np.asarray(x)) - 0.5 * np.asarray(D) ** 2)


# --- fermion sectors ----------------------------------------------------------

SECTORS = ("-1", "+1", "0_1", "0_2")
# signs of the psibar chibar and -V'' chi psi couplings on (1, psi chi),
# fixed by calibrate_block_signs on the free potential
BLOCK_SIGNS = (-1.0, 1.0)


def fermion_sector_state(sector, x, D, e, V):
    """Components on the basis (1, psi, chi, psi chi)."""
    x = np.asarray(x, dtype=float)
    D = np.asarray(D, dtype=float)
    psi = psi_value(x, D, e, V)
    z = np.zeros_like(psi)
    if sector == "-1":
        return np.stack([z, z, psi, z])
    if sector == "+1":
        return np.stack([z, psi, z, z])
    if sector == "0_1":
        w = _k(x, e, V)
        return np.stack([np.sqrt(2 * w) * psi, z, z, -1j * V.dV(x) * psi])
    if sector == "0_2":
        return np.stack([1j * D * psi, z, z, -1j * dpsi_dx(x, D, e, V)])
    raise ValueError(f"unknown sector {sector!r}")


def apply_full_H(sector, x, D, e, V, h=1e-3, signs=None):
    """H acting on a sector state; the F = 0 block couples the 1 and psi chi
    components: (a, b) -> (H_B a + s1 b, H_B b + s2 V'' a)."""
    s1, s2 = BLOCK_SIGNS if signs is None else signs
    comp = lambda xx, dd: fermion_sector_state(sector, xx, dd, e, V)
    hb = [apply_HB(lambda xx, dd, i=i: comp(xx, dd)[i], x, D, V, h) for i in range(4)]
    c = comp(x, D)
    out = np.stack(hb)
    out[0] = out[0] + s1 * c[3]
    out[3] = out[3] + s2 * V.d2V(x) * c[0]
    return out


def sector_residual(sector, x, D, e, V, h=1e-3, signs=None):
    """|H Psi - E Psi| / |Psi| pointwise."""
    c = fermion_sector_state(sector, x, D, e, V)
    r = apply_full_H(sector, x, D, e, V, h, signs) - e.E * c
    return np.sqrt(np.sum(np.abs(r) ** 2, axis=0)) / np.sqrt(np.sum(np.abs(c) ** 2, axis=0))


def calibrate_block_signs(omega=1.0, N=1.0, n=1, seed=0):
    """Pick the F = 0 block signs for which both F = 0 states are eigenstates
    of the free model at the shared energy n*omega."""
    from .potential import Potential
    V = Potential.harmonic(omega)
    e = EigenData(n * omega, N, True)
    x0 = math.sqrt(2 * N) / omega
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-0.7 * x0, 0.7 * x0, 20)
    Ds = rng.uniform(-1.0, 1.0, 20)
    scores = {}
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            scores[(s1, s2)] = max(float(np.max(sector_residual(s, xs, Ds, e, V, signs=(s1, s2))))
                                   for s in ("0_1", "0_2"))
    best = min(scores, key=scores.get)
    return best, scores


# --- singularity exponents ----------------------------------------------------

def singularity_exponent(dist, values, min_r2=0.999):
    """Slope of log|values| against log(dist)."""
    dist = np.asarray(dist, dtype=float)
    a = np.abs(np.asarray(values))
    if dist.size < 12:
        raise FitQualityError("need at least 12 samples")
    lx, ly = np.log(dist), np.log(a)
    slope, icpt = np.polyfit(lx, ly, 1)
    res = ly - (slope * lx + icpt)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res**2)) / ss if ss > 0 else 0.0
    if r2 < min_r2:
        raise FitQualityError(f"R^2 = {r2:.6f} below {min_r2}")
    return float(slope)


def turning_point_samples(e, V, D=0.3, decade=(1e-6, 1e-5), n=16):
    """Distances below the right turning point and the sample x values."""
    _, xp = turning_points(e.N, V)
    d = np.logspace(math.log10(decade[0]), math.log10(decade[1]), n) * max(1.0, abs(xp))
    return d, xp - d, np.full(n, D)


def sector_norm(sector, x, D, e, V):
    c = fermion_sector_state(sector, x, D, e, V)
    return np.sqrt(np.sum(np.abs(c) ** 2, axis=0))


# --- regularized x^(-3/2) integral ----------------------------------------------

def _sigma_window(xi):
    lo = math.sqrt(max(xi - 9.0, 0.0))
    hi = math.sqrt(max(xi, 0.0) + 9.0)
    pts = [math.sqrt(v) for v in (xi - 1.0, xi, xi + 1.0) if v > lo * lo and v < hi * hi]
    return lo, hi, pts


# c_n = Gamma(2n + 1/2) / (sqrt(pi) 4^n n!): moments of the unit Gaussian
# applied to the Taylor series of x^(-1/2); the remainder is O(exp(-xi^2))
_SERIES = [1.0]
for _n in range(1, 60):
    _SERIES.append(_SERIES[-1] * (2 * _n - 1.5) * (2 * _n - 0.5) / (4.0 * _n))
_SERIES_MIN_XI = 10.0


def _sigma_series(xi, deriv):
    total = 0.0
    prev = math.inf
    for n, c in enumerate(_SERIES):
        p = -0.5 - 2 * n
        term = c * (p * xi ** (p - 1) if deriv else xi**p)
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if prev < 1e-17 * abs(total):
            break
    return total


def _sigma(xi, deriv=False):
    """Unit-scale smoothed x_+^(-1/2) (or its derivative) at xi = x/eps."""
    if xi >= _SERIES_MIN_XI:
        return _sigma_series(xi, deriv)
    if deriv:
        f = lambda s: 2.0 * (s * s - xi) * math.exp(-((s * s - xi) ** 2))
    else:
        f = lambda s: math.exp(-((s * s - xi) ** 2))
    lo, hi, pts = _sigma_window(xi)
    val = quad(f, lo, hi, points=pts or None, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
    return 2.0 / math.sqrt(math.pi) * val


def inv_sqrt_eps(x, eps):
    """Gaussian-smoothed x_+^(-1/2): (2/(sqrt(pi) eps)) int_0^inf exp(-(s^2 - x)^2/eps^2) ds."""
    return _sigma(x / eps) / math.sqrt(eps)


def d_inv_sqrt_eps(x, eps):
    """x-derivative of inv_sqrt_eps."""
    return _sigma(x / eps, deriv=True) / eps**1.5


def regularized_integral(psi, dpsi, eps, support):
    """Both evaluations of int psi(x) x^(-3/2) dx.

    (a) 2 int_0^inf psi'(x) x^(-1/2) dx, and
    (b) -2 int psi(x) d/dx (x^(-1/2) smoothed at scale eps) dx.
    ``support`` = (a, b) bounds the support of psi.
    """
    a, b = support
    opts = dict(limit=400, epsabs=1e-13, epsrel=1e-11)
    lo = max(a, 0.0)
    form_a = 0.0
    if lo < b:
        if lo == 0.0:
            form_a = 2.0 * quad(dpsi, 0.0, b, weight="alg", wvar=(-0.5, 0.0), **opts)[0]
        else:
            form_a = 2.0 * quad(lambda x: dpsi(x) / math.sqrt(x), lo, b, **opts)[0]
    # the smoothed kernel varies on scale eps near 0 and vanishes like
    # exp(-(x/eps)^2) for x << -eps
    g = lambda x: psi(x) * d_inv_sqrt_eps(x, eps)
    cuts = [c for c in (-8 * eps, -2 * eps, 0.0, 2 * eps, 10 * eps, 100 * eps) if a < c < b]
    edges = [max(a, -8 * eps)] + [c for c in cuts if c > -8 * eps] + [b]
    form_b = sum(quad(g, u, v, **opts)[0] for u, v in zip(edges[:-1], edges[1:]) if v > u)
    return form_a, -2.0 * form_b


def direct_integral(psi, support):
    a, b = support
    if a <= 0:
        raise ValueError("direct integral needs support away from 0")
    return quad(lambda x: psi(x) * x**-1.5, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


# --- grid functions -----------------------------------------------------------------

MAGIC = b"HDGF"


@dataclass
class GridFunction:
    """Complex values on a rectangular grid; axis names (x, y) where y is D or P."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    singular: np.ndarray = None
    y_name: str = "D"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.x.size, self.y.size):
            raise ValueError("values must have shape (nx, ny)")
        if self.singular is None:
            self.singular = np.zeros(self.x.size, dtype=bool)

    @classmethod
    def from_function(cls, f, xb, yb, nx, ny, y_name="D"):
        x = np.linspace(xb[0], xb[1], nx)
        y = np.linspace(yb[0], yb[1], ny)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return cls(x, y, f(X, Y), None, y_name)

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def dy(self):
        return float(self.y[1] - self.y[0])

    @property
    def bounds(self):
        return float(self.x[0]), float(self.x[-1]), float(self.y[0]), float(self.y[-1])

    def norm2(self):
        """Discrete L2 norm squared, sum |v|^2 dx dy."""
        return float(np.sum(np.abs(self.values) ** 2) * self.dx * self.dy)

    def write_csv(self, fh):
        w = csv.writer(fh)
        w.writerow(["x", self.y_name, "re_psi", "im_psi"])
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                v = self.values[i, j]
                w.writerow([repr(float(xv)), repr(float(yv)), repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def read_csv(cls, fh):
        r = csv.reader(fh)
        head = next(r)
        rows = np.array([[float(c) for c in row] for row in r])
        x = np.unique(rows[:, 0])
        y = np.unique(rows[:, 1])
        vals = (rows[:, 2] + 1j * rows[:, 3]).reshape(x.size, y.size)
        return cls(x, y, vals, None, head[1])

    def to_bytes(self):
        """32-byte header (magic, nx, ny as uint32, x/y bounds as float32, flags)
        followed by row-major (re, im) doubles."""
        xa, xb, ya, yb = self.bounds
        head = struct.pack("<4sII4fI", MAGIC, self.x.size, self.y.size, xa, xb, ya, yb, 1)
        assert len(head) == 32
        body = np.ascontiguousarray(self.values, dtype="<c16").tobytes()
        return head + body

    @classmethod
    def from_bytes(cls, data, y_name="D"):
        magic, nx, ny, xa, xb, ya, yb, _ = struct.unpack("<4sII4fI", data[:32])
        if magic != MAGIC:
            raise ValueError("not a grid-function file")
        vals = np.frombuffer(data[32:], dtype="<c16").reshape(nx, ny).copy()
        return cls(np.linspace(xa, xb, nx), np.linspace(ya, yb, ny), vals, None, y_name)

    def write_binary(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def read_binary(cls, path, y_name="D"):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), y_name)


def psi_grid(e, V, nx=512, ny=512, L=None):
    """Psi_EN on the default grid [-L, L]^2, L = 1.5 x0; singular columns flagged."""
    if L is None:
        _, xp = turning_points(e.N, V)
        L = 1.5 * xp
    x = np.linspace(-L, L, nx)
    y = np.linspace(-L, L, ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    vals, bad = psi_EN(X, Y, e, V)
    return GridFunction(x, y, vals, bad.all(axis=1))


# --- characteristics evolution -------------------------------------------------------

def flow(V, x, P, t, rtol=1e-10, atol=1e-12):
    """Gamma^t for the reduced flow x' = P, P' = V'(x), vectorised over points."""
    return kernels.flow_batch(V.d1, np.asarray(x, dtype=float), np.asarray(P, dtype=float),
                              float(t), rtol, atol)


def _pullback(psi0, xb, Pb, border_tol):
    inside = ((xb >= psi0.x[0]) & (xb <= psi0.x[-1]) & (Pb >= psi0.y[0]) & (Pb <= psi0.y[-1]))
    if not np.all(inside):
        v = psi0.values
        border = max(np.abs(v[0]).max(), np.abs(v[-1]).max(), np.abs(v[:, 0]).max(),
                     np.abs(v[:, -1]).max())
        if border > border_tol * np.abs(v).max():
            raise SupportEscapeError("backward characteristics leave the grid where data is non-negligible")
    re = RectBivariateSpline(psi0.x, psi0.y, psi0.values.real, kx=3, ky=3)
    im = RectBivariateSpline(psi0.x, psi0.y, psi0.values.imag, kx=3, ky=3)
    out = np.zeros(xb.shape, dtype=complex)
    out[inside] = re.ev(xb[inside], Pb[inside]) + 1j * im.ev(xb[inside], Pb[inside])
    return GridFunction(psi0.x, psi0.y, out, None, psi0.y_name)


def characteristics_evolve(psi0, t, V, rtol=1e-10, atol=1e-12, border_tol=1e-8):
    """Psi_t(x, P) = Psi_0(Gamma^{-t}(x, P)) with bicubic interpolation of Psi_0.

    Nodes pulled back outside the grid take the value 0, which is allowed
    only when Psi_0 is negligible on the grid border.
    """
    return characteristics_evolve_many(psi0, [t], V, rtol, atol, border_tol)[0]


def characteristics_evolve_many(psi0, times, V, rtol=1e-10, atol=1e-12, border_tol=1e-8):
    """Psi_t for several times, chaining the backward flow between them."""
    X, P = np.meshgrid(psi0.x, psi0.y, indexing="ij")
    order = np.argsort(np.abs(times), kind="stable")
    out = [None] * len(times)
    xb, Pb, tb = X, P, 0.0
    for i in order:
        t = float(times[i])
        if t * tb < 0:
            xb, Pb, tb = X, P, 0.0
        if t != tb:
            xb, Pb = flow(V, xb, Pb, -(t - tb), rtol, atol)
            tb = t
        out[i] = _pullback(psi0, xb, Pb, border_tol)
    return out


# --- generalized Fourier coefficients ------------------------------------------------

def generalized_fourier(psi_test, e, V, n_theta=None):
    """Overlap int conj(Psi_EN) Psi_test dx dD over the allowed region.

    The x-integral uses x = c + r sin(theta) between the turning points, which
    absorbs the 1/sqrt(x0 - x) factor of Psi_EN; the D-integral is the
    trapezoid rule on the test grid. Psi_test is interpolated bicubically in x.
    """
    xm, xp = turning_points(e.N, V)
    c, r = 0.5 * (xp + xm), 0.5 * (xp - xm)
    n_theta = n_theta or max(64, psi_test.x.size)
    tg, wg = leggauss(n_theta)
    th = 0.5 * math.pi * tg
    wt = 0.5 * math.pi * wg
    xs = c + r * np.sin(th)
    jac = r * np.cos(th)
    re = RectBivariateSpline(psi_test.x, psi_test.y, psi_test.values.real, kx=3, ky=3)
    im = RectBivariateSpline(psi_test.x, psi_test.y, psi_test.values.imag, kx=3, ky=3)
    T = re(xs, psi_test.y) + 1j * im(xs, psi_test.y)
    X, Y = np.meshgrid(xs, psi_test.y, indexing="ij")
    w = e.N + V.V(X)
    amp = jac[:, None] / np.sqrt(w)
    S = action_function_S(X, Y, e, V)
    integrand = amp * np.exp(-1j * S) * T
    inner = np.trapezoid(integrand, psi_test.y, axis=1)
    return complex(np.sum(wt * inner))
