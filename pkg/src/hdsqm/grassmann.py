"""Grassmann algebra on (psi, chi, psibar, chibar) and the graded Poisson bracket.

A GrassmannNumber stores 16 complex coefficients indexed by bitmask: bit i
set means generator i is present, monomials ordered by generator index.
A SuperFunction evaluates to a jet: the value and its four bosonic
partials, each a Grassmann element, for a batch of phase-space points.
"""
import numpy as np

GENERATORS = ("psi", "chi", "psibar", "chibar")
PSI, CHI, PSIBAR, CHIBAR = 0, 1, 2, 3
NB = 16
COORDS = ("x", "D", "p", "P")


class InconsistentPartialsError(ValueError):
    pass


def _popcount(i):
    return bin(i).count("1")


def _mul_sign(a, b):
    # number of transpositions to sort the concatenated monomial a.b
    s = 0
    for j in range(4):
        if b >> j & 1:
            s += _popcount(a >> (j + 1))
    return -1 if s % 2 else 1


_MUL = np.zeros((NB, NB, NB))
for _a in range(NB):
    for _b in range(NB):
        if _a & _b == 0:
            _MUL[_a, _b, _a | _b] = _mul_sign(_a, _b)

# left/right derivative matrices: out[k] = sum_i D[g][i, k] a[i]
_DL = np.zeros((4, NB, NB))
_DR = np.zeros((4, NB, NB))
for _g in range(4):
    for _i in range(NB):
        if _i >> _g & 1:
            _k = _i & ~(1 << _g)
            _DL[_g, _i, _k] = -1 if _popcount(_i & ((1 << _g) - 1)) % 2 else 1
            _DR[_g, _i, _k] = -1 if _popcount(_i >> (_g + 1)) % 2 else 1

DEGREE = np.array([_popcount(i) for i in range(NB)])

# sparse form of _MUL: 81 nonzero (i, j) -> k products and a scatter matrix
_MI, _MJ, _MK = np.nonzero(_MUL)
_MS = _MUL[_MI, _MJ, _MK]
_SCATTER = np.zeros((_MI.size, NB))
_SCATTER[np.arange(_MI.size), _MK] = 1.0


def generator_index(g):
    if isinstance(g, str):
        return GENERATORS.index(g)
    if g not in range(4):
        raise ValueError(f"unknown generator {g!r}")
    return g


class GrassmannNumber:
    """Element of the 16-dimensional Grassmann algebra (batched on leading axes)."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.shape[-1] != NB:
            raise ValueError("last axis must have 16 components")
        self.c = c

    @classmethod
    def scalar(cls, v):
        c = np.zeros(np.shape(v) + (NB,), dtype=complex)
        c[..., 0] = v
        return cls(c)

    @classmethod
    def generator(cls, g):
        c = np.zeros(NB, dtype=complex)
        c[1 << generator_index(g)] = 1.0
        return cls(c)

    @classmethod
    def monomial(cls, gens, coeff=1.0):
        """Product of the listed generators, in the listed order."""
        out = cls.scalar(coeff)
        for g in gens:
            out = out * cls.generator(g)
        return out

    def __add__(self, other):
        return GrassmannNumber(self.c + _coerce(other).c)

    __radd__ = __add__

    def __sub__(self, other):
        return GrassmannNumber(self.c - _coerce(other).c)

    def __rsub__(self, other):
        return GrassmannNumber(_coerce(other).c - self.c)

    def __neg__(self):
        return GrassmannNumber(-self.c)

    def __mul__(self, other):
        if isinstance(other, GrassmannNumber):
            return g_mul(self, other)
        return GrassmannNumber(self.c * np.asarray(other)[..., None])

    def __rmul__(self, other):
        return GrassmannNumber(np.asarray(other)[..., None] * self.c)

    def __repr__(self):
        terms = []
        for i in range(NB):
            v = self.c[..., i]
            if np.any(v != 0):
                name = "*".join(GENERATORS[j] for j in range(4) if i >> j & 1) or "1"
                terms.append(f"{v}*{name}" if i else f"{v}")
        return "GrassmannNumber(" + (" + ".join(terms) or "0") + ")"

    @property
    def body(self):
        """Scalar (degree-0) part."""
        return self.c[..., 0]

    def parity_parts(self):
        even = self.c * (DEGREE % 2 == 0)
        return GrassmannNumber(even), GrassmannNumber(self.c - even)

    def grade(self, tol=0.0):
        """0 or 1 for homogeneous elements, None otherwise."""
        odd = np.max(np.abs(self.c[..., DEGREE % 2 == 1]), initial=0.0)
        even = np.max(np.abs(self.c[..., DEGREE % 2 == 0]), initial=0.0)
        if odd <= tol:
            return 0
        if even <= tol:
            return 1
        return None

    def allclose(self, other, atol=1e-12):
        return bool(np.max(np.abs(self.c - _coerce(other).c), initial=0.0) <= atol)


def _coerce(x):
    return x if isinstance(x, GrassmannNumber) else GrassmannNumber.scalar(x)


def g_mul(a, b):
    """Exterior product with signs fixed by the generator order."""
    a, b = _coerce(a), _coerce(b)
    return GrassmannNumber(_mul_arrays(a.c, b.c))


def _mul_arrays(a, b):
    return ((a[..., _MI] * b[..., _MJ]) * _MS) @ _SCATTER


def g_derive_left(a, g):
    """Left derivative: anticommute g to the front, then remove it."""
    return GrassmannNumber(_coerce(a).c @ _DL[generator_index(g)])


def g_derive_right(a, g):
    """Right derivative: anticommute g to the back, then remove it."""
    return GrassmannNumber(_coerce(a).c @ _DR[generator_index(g)])


# --- super functions ---------------------------------------------------------

class Jet:
    """Value and bosonic partials (d/dx, d/dD, d/dp, d/dP) as an array (..., 5, 16)."""

    __slots__ = ("a",)

    def __init__(self, a):
        self.a = np.asarray(a, dtype=complex)

    @classmethod
    def const(cls, g, npts):
        a = np.zeros((npts, 5, NB), dtype=complex)
        a[:, 0] = _coerce(g).c
        return cls(a)

    @classmethod
    def from_scalar(cls, value, partials):
        """Bosonic (body-only) jet from a value array and four partial arrays."""
        value = np.asarray(value, dtype=float)
        a = np.zeros(value.shape + (5, NB), dtype=complex)
        a[..., 0, 0] = value
        for i, d in enumerate(partials):
            a[..., i + 1, 0] = d
        return cls(a)

    @property
    def value(self):
        return GrassmannNumber(self.a[..., 0, :])

    def partial(self, i):
        return GrassmannNumber(self.a[..., i + 1, :])

    def __add__(self, o):
        return Jet(self.a + _jet(o, self).a)

    __radd__ = __add__

    def __sub__(self, o):
        return Jet(self.a - _jet(o, self).a)

    def __rsub__(self, o):
        return Jet(_jet(o, self).a - self.a)

    def __neg__(self):
        return Jet(-self.a)

    def __mul__(self, o):
        if isinstance(o, Jet):
            f, g = self.a, o.a
            out = np.empty(np.broadcast_shapes(f.shape, g.shape), dtype=complex)
            out[..., 0, :] = _mul_arrays(f[..., 0, :], g[..., 0, :])
            out[..., 1:, :] = (_mul_arrays(f[..., 1:, :], g[..., :1, :])
                               + _mul_arrays(f[..., :1, :], g[..., 1:, :]))
            return Jet(out)
        if isinstance(o, GrassmannNumber):
            return Jet(_mul_arrays(self.a, o.c))
        return Jet(self.a * np.asarray(o)[..., None, None])

    def __rmul__(self, o):
        if isinstance(o, GrassmannNumber):
            return Jet(_mul_arrays(o.c, self.a))
        return Jet(np.asarray(o)[..., None, None] * self.a)


def _jet(o, like):
    if isinstance(o, Jet):
        return o
    a = np.zeros_like(like.a)
    a[..., 0, :] = _coerce(o).c
    return Jet(a)


class SuperFunction:
    """Grassmann-valued function of (x, D, p, P) with analytic bosonic partials.

    ``fn`` maps an (n, 4) array of points to a Jet of shape (n, 5, 16).
    """

    def __init__(self, fn, name="", grade=None):
        self.fn = fn
        self.name = name
        self.grade = grade

    def jet(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.fn(pts)

    def value(self, pts):
        return self.jet(pts).value

    def _combine(self, other, op, name):
        if isinstance(other, SuperFunction):
            return SuperFunction(lambda pts: op(self.jet(pts), other.jet(pts)), name)
        return SuperFunction(lambda pts: op(self.jet(pts), other), name)

    def __add__(self, o):
        return self._combine(o, lambda a, b: a + b, f"({self.name}+{_nm(o)})")

    __radd__ = __add__

    def __sub__(self, o):
        return self._combine(o, lambda a, b: a - b, f"({self.name}-{_nm(o)})")

    def __rsub__(self, o):
        return SuperFunction(lambda pts: _jet(o, self.jet(pts)) - self.jet(pts), f"({_nm(o)}-{self.name})")

    def __neg__(self):
        return SuperFunction(lambda pts: -self.jet(pts), f"-{self.name}", self.grade)

    def __mul__(self, o):
        return self._combine(o, lambda a, b: a * b, f"{self.name}*{_nm(o)}")

    def __rmul__(self, o):
        if isinstance(o, SuperFunction):
            return o * self
        return SuperFunction(lambda pts: o * self.jet(pts), f"{_nm(o)}*{self.name}", self.grade)

    def check_partials(self, pts, h=1e-5, tol=1e-6):
        """Max discrepancy between analytic partials and central differences."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        j = self.jet(pts)
        err = 0.0
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            fd = (self.jet(pts + e).a[:, 0] - self.jet(pts - e).a[:, 0]) / (2 * h)
            scale = 1.0 + np.max(np.abs(j.a[:, i + 1]))
            err = max(err, float(np.max(np.abs(fd - j.a[:, i + 1]))) / scale)
        if err > tol:
            raise InconsistentPartialsError(f"{self.name}: partials differ from finite differences by {err:.3g}")
        return err


def _nm(o):
    return o.name if isinstance(o, SuperFunction) else "c"


def coordinate(name):
    i = COORDS.index(name)

    def fn(pts):
        a = np.zeros((len(pts), 5, NB), dtype=complex)
        a[:, 0, 0] = pts[:, i]
        a[:, i + 1, 0] = 1.0
        return Jet(a)

    return SuperFunction(fn, name, 0)


def constant(g, name="const"):
    g = _coerce(g)
    return SuperFunction(lambda pts: Jet.const(g, len(pts)), name, g.grade())


def generator(g):
    return constant(GrassmannNumber.generator(g), GENERATORS[generator_index(g)])


def of_x(f, df, name="f(x)"):
    """Bosonic function of x with derivative df."""
    def fn(pts):
        x = pts[:, 0]
        z = np.zeros_like(x)
        return Jet.from_scalar(f(x), (df(x), z, z, z))

    return SuperFunction(fn, name, 0)


def from_bosonic(f, grad, name="f"):
    """Bosonic function of all four coordinates; grad returns 4 arrays."""
    def fn(pts):
        cols = [pts[:, i] for i in range(4)]
        return Jet.from_scalar(f(*cols), grad(*cols))

    return SuperFunction(fn, name, 0)


# --- bracket -------------------------------------------------------------------

_I = 1j
_PAIRS = ((1, 3), (2, 4))  # (x, p), (D, P) as jet rows


def bracket_jets(A, B):
    """Graded Poisson bracket of two jets, before the normalization constant.

    Bosonic part: sum over (q, p) of dA/dq dB/dp - dA/dp dB/dq.
    Fermionic part: - sum over theta in (psi, chi) of
    dR A/d theta dL B/d pi + dR A/d pi dL B/d theta with d/d pi_theta = i d/d thetabar.
    """
    a, b = A.a, B.a
    out = np.zeros(np.broadcast_shapes(a[..., 0, :].shape, b[..., 0, :].shape), dtype=complex)
    for q, p in _PAIRS:
        out += _mul_arrays(a[..., q, :], b[..., p, :]) - _mul_arrays(a[..., p, :], b[..., q, :])
    av, bv = a[..., 0, :], b[..., 0, :]
    for th, bar in ((PSI, PSIBAR), (CHI, CHIBAR)):
        out -= _mul_arrays(av @ _DR[th], _I * (bv @ _DL[bar]))
        out -= _mul_arrays(_I * (av @ _DR[bar]), bv @ _DL[th])
    return GrassmannNumber(out)


class Calibration:
    """Global bracket normalization c, fitted once."""

    def __init__(self, c=None):
        self.c = c

    def require(self):
        if self.c is None:
            raise CalibrationMissingError("bracket normalization has not been calibrated")
        return self.c


class CalibrationMissingError(RuntimeError):
    pass


def super_poisson_bracket(A, B, pts, c=1.0, check=True):
    """c * {A, B} at the given points (one or an (n, 4) array)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if check:
        A.check_partials(pts)
        B.check_partials(pts)
    return c * bracket_jets(A.jet(pts), B.jet(pts))


def fit_normalization(raw, target):
    """Least-squares complex c with c * raw ~ target (GrassmannNumbers)."""
    r, t = raw.c.ravel(), target.c.ravel()
    den = np.vdot(r, r)
    if abs(den) == 0:
        raise ValueError("cannot calibrate on a vanishing bracket")
    return complex(np.vdot(r, t) / den)
