"""Classical integration of the pure higher-derivative, mixed and two-dot models."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, QhullError

from . import _backend
from ._backend import kernels
from .potential import PhaseState, Potential, TwoDotState

GUARD = 1e12


class UnsupportedChargeError(ValueError):
    """The requested integral of motion does not exist for this model."""


class InsufficientExtremaError(ValueError):
    pass


@dataclass(frozen=True)
class Model:
    """A classical model: kind in {'pure', 'mixed', 'twodot'}."""

    kind: str
    V: Potential
    gamma: float = 0.0

    @property
    def code(self):
        return {"pure": _backend.PURE, "mixed": _backend.MIXED, "twodot": _backend.TWODOT}[self.kind]

    @property
    def dim(self):
        return 6 if self.kind == "twodot" else 4

    @property
    def columns(self):
        if self.kind == "twodot":
            return ("x", "x1", "x2", "x3", "D", "D1")
        return ("x", "D", "p", "P")


def pure_hd(V):
    return Model("pure", V)


def mixed(V, gamma):
    return Model("mixed", V, float(gamma))


def twodot(V):
    return Model("twodot", V)


def _state_array(s):
    if isinstance(s, (PhaseState, TwoDotState)):
        return s.as_array()
    return np.asarray(s, dtype=float)


def eom_pure_hd(s, V):
    """(x', D', p', P') = (P, p, D V''(x), V'(x))."""
    return kernels.rhs(_backend.PURE, V.d1, V.d2, 0.0, _state_array(s))


def eom_mixed(s, V, gamma):
    """(x', D', p', P') = (P, p - gamma P, D V''(x), V'(x) + gamma D)."""
    return kernels.rhs(_backend.MIXED, V.d1, V.d2, float(gamma), _state_array(s))


def eom_twodot(s, V):
    """First-order form of x'''' = -D V''(x), D'' = V'(x)."""
    return kernels.rhs(_backend.TWODOT, V.d1, V.d2, 0.0, _state_array(s))


def rhs(model, y):
    return kernels.rhs(model.code, model.V.d1, model.V.d2, model.gamma, np.asarray(y, dtype=float))


def conserved_charges(model, s):
    """H (and N for the pure model) at a state or an (n, 4) array of states."""
    if model.kind == "twodot":
        raise UnsupportedChargeError("charges are provided for the pure and mixed models only")
    y = _state_array(s)
    x, D, p, P = (y[..., i] for i in range(4))
    V = model.V
    H = p * P - D * V.dV(x)
    out = {}
    if model.kind == "mixed":
        out["H"] = H - 0.5 * model.gamma * (D * D + P * P)
    else:
        out["H"] = H
        out["N"] = 0.5 * P * P - V.V(x)
    return out


def energy_N(model, s):
    if model.kind != "pure":
        raise UnsupportedChargeError(f"no quasi-energy N for the {model.kind} model")
    return conserved_charges(model, s)["N"]


@dataclass
class Trajectory:
    model: Model
    t: np.ndarray
    y: np.ndarray
    h: np.ndarray
    status: str = "completed"
    t_star: float = math.nan
    t_bracket: tuple = (math.nan, math.nan)
    n_rejected: int = 0
    charges: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, name):
        return self.y[:, self.model.columns.index(name)]

    @property
    def blowup(self):
        return self.status == "blowup"

    @property
    def final_state(self):
        return self.y[-1].copy()

    def state_at(self, t):
        """State at time t using a Dormand-Prince step from the previous sample."""
        i = int(np.searchsorted(self.t, t, side="right")) - 1
        i = min(max(i, 0), len(self.t) - 1)
        dt = t - self.t[i]
        if dt == 0.0:
            return self.y[i].copy()
        return kernels.dp5_step(self.model.code, self.model.V.d1, self.model.V.d2,
                                self.model.gamma, self.y[i], dt)[0]

    def resample(self, times):
        return np.array([self.state_at(t) for t in times])

    def charge_drift(self, name):
        c = self.charges[name]
        scale = max(abs(c[0]), 1e-300)
        with np.errstate(over="ignore", invalid="ignore"):
            d = float(np.max(np.abs(c - c[0])) / scale)
        return d if math.isfinite(d) else math.inf

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_trajectory_csv(self, fh)


def write_trajectory_csv(traj, fh):
    """Columns t, x, D, p, P, H, N (N left empty where undefined)."""
    if traj.model.kind == "twodot":
        raise ValueError("trajectory CSV is defined for the pure and mixed models")
    w = csv.writer(fh)
    w.writerow(["t", "x", "D", "p", "P", "H", "N"])
    H = traj.charges.get("H")
    N = traj.charges.get("N")
    for i, t in enumerate(traj.t):
        row = [repr(float(t))] + [repr(float(v)) for v in traj.y[i]]
        row.append(repr(float(H[i])) if H is not None else "")
        row.append(repr(float(N[i])) if N is not None else "")
        w.writerow(row)


def _refine_blowup(model, t0, y0, h, guard, rel_width=1e-6):
    """Bisect the sub-step at which max|y| first exceeds the guard."""
    code, d1, d2, g = model.code, model.V.d1, model.V.d2, model.gamma
    lo, hi = 0.0, h
    while hi - lo > rel_width * max(abs(t0 + hi), 1e-300):
        mid = 0.5 * (lo + hi)
        y = kernels.dp5_step(code, d1, d2, g, y0, mid)[0]
        if np.all(np.isfinite(y)) and np.max(np.abs(y)) <= guard:
            lo = mid
        else:
            hi = mid
    return t0 + lo, t0 + hi


def integrate(model, s0, t_end, rel_tol=1e-10, abs_tol=1e-12, guard=GUARD, max_steps=5_000_000,
              h0=1e-3):
    """Adaptive DP5(4) integration from t = 0 to t_end.

    Integration stops early with status 'blowup' when a component exceeds
    ``guard`` or the step size underflows; ``t_star`` is then the bisected
    escape time.
    """
    if not (0 < rel_tol <= 1e-2 and 0 < abs_tol <= 1e-2):
        raise ValueError("tolerances must lie in (0, 1e-2]")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    y0 = _state_array(s0)
    if y0.shape != (model.dim,):
        raise ValueError(f"{model.kind} model needs a state of length {model.dim}")
    ts, ys, hs, code, rej = kernels.dopri5(model.code, model.V.d1, model.V.d2, model.gamma,
                                          y0.copy(), 0.0, float(t_end), rel_tol, abs_tol, h0,
                                          guard, int(max_steps))
    status = {_backend.COMPLETED: "completed", _backend.BLOWUP: "blowup",
              _backend.UNDERFLOW: "blowup", _backend.MAX_STEPS: "max_steps"}[code]
    traj = Trajectory(model, ts, ys, hs, status=status, n_rejected=int(rej))
    if code == _backend.BLOWUP:
        lo, hi = _refine_blowup(model, ts[-2], ys[-2], hs[-1], guard)
        traj.t_bracket = (lo, hi)
        traj.t_star = 0.5 * (lo + hi)
        traj.t, traj.y, traj.h = ts[:-1], ys[:-1], hs[:-1]
    elif code == _backend.UNDERFLOW:
        traj.t_bracket = (float(ts[-1]), float(ts[-1]) + 1e-14 * max(1.0, abs(ts[-1])))
        traj.t_star = float(ts[-1])
    if model.kind != "twodot":
        traj.charges = conserved_charges(model, traj.y)
    return traj


def time_reversed(model, s):
    """Momentum flip; maps solutions of the pure model to time-reversed ones."""
    if model.kind != "pure":
        raise ValueError("time reversal by momentum flip holds for the pure model")
    y = _state_array(s).copy()
    y[2:] *= -1.0
    return y


# --- sections and envelopes ------------------------------------------------

def _coord_derivative(model, y, idx):
    return rhs(model, y)[idx]


def poincare_section(traj, coord="D", value=0.0, direction=1):
    """Crossings of coord = value with sign(d coord/dt) = direction.

    Returns an (n, 2) array of (x, P); each crossing is located by root
    finding on a Dormand-Prince sub-step from the preceding sample.
    """
    model = traj.model
    if traj.blowup:
        raise ValueError("section of a collapsing trajectory is not defined")
    idx = model.columns.index(coord)
    code, d1, d2, g = model.code, model.V.d1, model.V.d2, model.gamma
    f = traj.y[:, idx] - value
    pts = []
    for i in np.nonzero((f[:-1] * direction < 0) & (f[1:] * direction >= 0))[0]:
        y0, h = traj.y[i], traj.t[i + 1] - traj.t[i]
        step = lambda s: kernels.dp5_step(code, d1, d2, g, y0, s)[0]
        s = brentq(lambda s: step(s)[idx] - value, 0.0, h, xtol=1e-15, rtol=1e-14)
        y = step(s)
        if direction * _coord_derivative(model, y, idx) <= 0:
            continue
        pts.append((y[0], y[3] if model.kind != "twodot" else y[1]))
    return np.array(pts).reshape(-1, 2)


def section_curve_residual(points, V):
    """Max distance of section points from the mean N level curve P^2/2 - V(x) = N."""
    if len(points) == 0:
        return 0.0
    x, P = points[:, 0], points[:, 1]
    N = 0.5 * P * P - V.V(x)
    grad = np.hypot(-V.dV(x), P)
    return float(np.max(np.abs(N - N.mean()) / np.maximum(grad, 1e-12)))


def hull_area(points):
    if len(points) < 3:
        return 0.0
    try:
        return float(ConvexHull(points).volume)
    except QhullError:  # degenerate (collinear) sets
        return 0.0


def find_extrema(t, y):
    """Local extrema (t_k, y_k) by sign change of the discrete derivative,
    refined by the parabola through the three surrounding samples."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    dy = np.diff(y)
    idx = np.nonzero(dy[:-1] * dy[1:] < 0)[0] + 1
    tk, yk = [], []
    for i in idx:
        t0, t1, t2 = t[i - 1:i + 2]
        y0, y1, y2 = y[i - 1:i + 2]
        a, b, c = np.polyfit([t0 - t1, 0.0, t2 - t1], [y0, y1, y2], 2)
        if a != 0.0:
            s = -b / (2 * a)
            if t0 - t1 <= s <= t2 - t1:
                tk.append(t1 + s)
                yk.append(c - b * b / (4 * a))
                continue
        tk.append(t1)
        yk.append(y1)
    return np.array(tk), np.array(yk)


def envelope_analysis(t, y, min_extrema=20):
    """Fit |extrema| linearly in time and give a quartile boundedness verdict."""
    tk, yk = find_extrema(t, y)
    if len(tk) < min_extrema:
        raise InsufficientExtremaError(f"found {len(tk)} extrema, need {min_extrema}")
    peaks = np.abs(yk)
    slope, intercept = np.polyfit(tk, peaks, 1)
    resid = peaks - (slope * tk + intercept)
    ss_tot = float(np.sum((peaks - peaks.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    q = t[0] + 0.75 * (t[-1] - t[0])
    early, late = peaks[tk < q], peaks[tk >= q]
    bounded = bool(len(late) == 0 or late.max() <= 1.2 * early.max())
    return {"t": tk, "peaks": peaks, "slope": float(slope), "intercept": float(intercept),
            "r2": r2, "bounded": bounded}


def trajectory_envelope(traj, coord="D", samples_per_unit=50):
    """Envelope analysis of one coordinate on a uniform dense-output grid."""
    n = max(int((traj.t[-1] - traj.t[0]) * samples_per_unit), 200)
    ts = np.linspace(traj.t[0], traj.t[-1], n)
    ys = traj.resample(ts)[:, traj.model.columns.index(coord)]
    return envelope_analysis(ts, ys)


# --- two-dot linear model ----------------------------------------------------

def characteristic_roots_twodot(omega):
    """Roots of lambda^6 = -omega^6, sorted by (real, imag)."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    k = np.arange(6)
    roots = omega * np.exp(1j * np.pi * (2 * k + 1) / 6)
    roots = np.round(roots.real, 15) + 1j * np.round(roots.imag, 15)
    return np.array(sorted(roots, key=lambda z: (z.real, z.imag)))


def growth_rate(t, y, t_fit=None):
    """Exponential growth rate from a log-linear fit of the extrema of y.

    Falls back to the running maximum of |y| when fewer than four extrema
    lie in the fit window.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    t0 = t[0] if t_fit is None else t_fit
    tk, yk = find_extrema(t, y)
    m = (tk >= t0) & (yk != 0)
    if np.count_nonzero(m) >= 4:
        return float(np.polyfit(tk[m], np.log(np.abs(yk[m])), 1)[0])
    a = np.maximum.accumulate(np.abs(y))
    m = t >= t0
    return float(np.polyfit(t[m], np.log(a[m]), 1)[0])
