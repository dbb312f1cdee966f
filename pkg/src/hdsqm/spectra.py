"""Spectra of the quadratic models and semiclassical level counting."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import erf

from .grassmann import GrassmannNumber, bracket_jets, coordinate, generator
from .potential import Potential

FERMION_MULTIPLIER = 4


@dataclass
class LevelSet:
    """Spectrum lines: energies with (j, k) labels and degeneracies."""

    energy: np.ndarray
    j: np.ndarray
    k: np.ndarray
    degeneracy: np.ndarray
    truncation: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.energy)

    def write_csv(self, fh):
        w = csv.writer(fh)
        w.writerow(["energy", "j", "k", "degeneracy"])
        for e, j, k, d in zip(self.energy, self.j, self.k, self.degeneracy):
            w.writerow([repr(float(e)), int(j), int(k), int(d)])


def free_spectrum(omega, n_max):
    """E = omega (n+ - n-) with 0 <= n+- <= n_max.

    Degeneracy counts bosonic pairs only; the fermionic factor 4 for
    non-vacuum levels is stored in meta.
    """
    if not omega > 0 or n_max < 1:
        raise ValueError("need omega > 0 and n_max >= 1")
    d = np.arange(-n_max, n_max + 1)
    return LevelSet(omega * d, np.maximum(d, 0), np.maximum(-d, 0), n_max + 1 - np.abs(d),
                    {"n_max": n_max}, {"fermion_multiplier": FERMION_MULTIPLIER, "labels": "n+,n-"})


def free_pairs(omega, n_max):
    """All (n+, n-, E) pairs of the truncated free spectrum (brute force)."""
    return [(a, b, omega * (a - b)) for a in range(n_max + 1) for b in range(n_max + 1)]


def mixed_frequencies(omega, gamma):
    """omega_{1,2} = gamma/2 (sqrt(1 + tau^2) -+ 1), tau = 2 omega/gamma = tan(2 phi)."""
    if gamma == 0:
        raise ValueError("gamma = 0: rotation is degenerate, use free_spectrum")
    if gamma < 0 or omega < 0:
        raise ValueError("need gamma > 0 and omega >= 0")
    tau = 2.0 * omega / gamma
    s = math.hypot(1.0, tau)
    w1 = 0.5 * gamma * tau * tau / (s + 1.0)  # = gamma/2 (s - 1), no cancellation
    w2 = w1 + gamma
    return w1, w2, 0.5 * math.atan(tau)


def pais_uhlenbeck_coefficients(w1, w2):
    """(w1^2 + w2^2, w1^2 w2^2) of L = (q''^2 - (w1^2+w2^2) q'^2 + w1^2 w2^2 q)/2."""
    return w1 * w1 + w2 * w2, (w1 * w2) ** 2


def lattice_levels(w1, w2, j_max, k_max, shift=0.0, convention="literal"):
    """Levels labelled by j in [0, j_max], k in [0, k_max].

    convention 'literal': (w1 + 1/2) j - (w2 + 1/2) k + shift
    convention 'oscillator': w1 (j + 1/2) - w2 (k + 1/2) + shift
    """
    j, k = np.meshgrid(np.arange(j_max + 1), np.arange(k_max + 1), indexing="ij")
    j, k = j.ravel(), k.ravel()
    if convention == "literal":
        e = (w1 + 0.5) * j - (w2 + 0.5) * k + shift
    elif convention == "oscillator":
        e = w1 * (j + 0.5) - w2 * (k + 0.5) + shift
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return e, j, k


def mixed_spectrum(omega, gamma, j_max, k_max, shift=0.0, convention="literal"):
    w1, w2, phi = mixed_frequencies(omega, gamma)
    e, j, k = lattice_levels(w1, w2, j_max, k_max, shift, convention)
    a, b = pais_uhlenbeck_coefficients(w1, w2)
    return LevelSet(e, j, k, np.ones_like(j), {"j_max": j_max, "k_max": k_max},
                    {"omega1": w1, "omega2": w2, "phi": phi, "shift": shift,
                     "convention": convention, "pu_w1sq_plus_w2sq": a, "pu_w1sq_w2sq": b})


def synthetic_spectrum(w1, w2, j_max, k_max, shift=0.0, convention="literal"):
    e, j, k = lattice_levels(w1, w2, j_max, k_max, shift, convention)
    return LevelSet(e, j, k, np.ones_like(j), {"j_max": j_max, "k_max": k_max},
                    {"omega1": w1, "omega2": w2, "convention": convention})


def gap_statistics(levels, window=(0.0, math.inf), merge_tol=1e-12):
    """Count of levels in [E - d, E + d] and the minimal gap between distinct energies there."""
    E0, d = window
    e = np.sort(np.asarray(levels.energy, dtype=float))
    if e.size == 0:
        raise ValueError("empty level set")
    e = e[(e >= E0 - d) & (e <= E0 + d)]
    if e.size < 2:
        return {"count": int(e.size), "min_gap": math.inf}
    scale = max(1.0, float(np.max(np.abs(e))))
    gaps = np.diff(e)
    gaps = gaps[gaps > merge_tol * scale]
    return {"count": int(e.size), "min_gap": float(gaps.min()) if gaps.size else math.inf}


# --- semiclassical counting -------------------------------------------------

def _quad_omega(V):
    if not V.is_quadratic:
        raise ValueError("semiclassical comparison needs a quadratic potential")
    w2 = -2.0 * (V.coeffs[2] if V.degree == 2 else 0.0)
    if w2 <= 0 or any(c != 0 for c in V.coeffs[:2]):
        raise ValueError("expected V = -omega^2 X^2/2 with omega > 0")
    return math.sqrt(w2)


def g_gauss(u, width, center=0.0):
    """g(u) = int_{-inf}^u exp(-(w - c)^2/width^2) dw."""
    return 0.5 * math.sqrt(math.pi) * width * (1.0 + erf((u - center) / width))


def phase_space_integral(omega, gamma, U, width, center=0.0):
    """int dx dp/(2 pi gamma) g(u), u = (p^2 + V'^2)/(2 gamma) <= U, in closed form.

    The disc u <= U has dx dp = (2 pi gamma/omega^2) du.
    """
    c = center
    A = lambda u: ((u - c) * 0.5 * math.sqrt(math.pi) * width * (1 + erf((u - c) / width))
                   + 0.5 * width * width * math.exp(-((u - c) / width) ** 2))
    return (A(U) - A(0.0)) / omega**2


def _block(omega, gamma, M):
    na = np.arange(M + 1)
    diag = -gamma * (M - na + 0.5)
    off = omega * np.sqrt((na[:-1] + 1.0) * (M - na[:-1]))
    return diag, off


def lattice_sum(omega, gamma, n_cut, width, center=0.0, tol=1e-14, M_limit=100000):
    """Tr[Pi f(H) Pi] with H = w (a b^+ + b a^+) - gamma (b^+ b + 1/2), Pi = projector on n_a <= n_cut.

    H conserves M = n_a + n_b; each block is tridiagonal.
    """
    f = lambda e: np.exp(-((e - center) / width) ** 2)
    total = 0.0
    small = 0
    for M in range(M_limit):
        diag, off = _block(omega, gamma, M)
        if M == 0:
            ev, vec = diag, np.ones((1, 1))
        else:
            ev, vec = eigh_tridiagonal(diag, off)
        rows = vec[: min(n_cut, M) + 1]
        contrib = float(np.sum(rows**2 * f(ev)[None, :]))
        total += contrib
        small = small + 1 if contrib < tol * max(total, 1e-300) else 0
        if M > n_cut and small >= 20:
            break
    return total


def block_eigenvalues(omega, gamma, M):
    diag, off = _block(omega, gamma, M)
    return diag if M == 0 else eigh_tridiagonal(diag, off, eigvals_only=True)


def semiclassical_count(V, gamma, width=20.0, n_cut=10, center=0.0):
    """Phase-space integral and lattice trace with matched cutoffs.

    n_a <= n_cut on the lattice side corresponds to |a|^2 <= n_cut + 1,
    i.e. u <= U = omega^2 (n_cut + 1)/gamma, a disc of radius
    R = sqrt(2 gamma U) in the (p, V'(x)) plane.
    """
    omega = _quad_omega(V)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    U = omega**2 * (n_cut + 1) / gamma
    return {"integral": phase_space_integral(omega, gamma, U, width, center),
            "lattice_sum": lattice_sum(omega, gamma, n_cut, width, center),
            "U": U, "R": math.sqrt(2 * gamma * U), "n_cut": n_cut, "width": width,
            "center": center}


# --- canonical transformation of the free model ----------------------------------

def oscillator_decomposition(V, pts, c=1j):
    """Apply the (x+-, p+-, psi+-) substitution to the free charges.

    Returns max residuals of Q - (Q+ + Q-), Qbar - (Qbar+ - Qbar-), H - (H+ - H-),
    the minimum of the bosonic part of H+, and the brackets of the new
    coordinates, all at the given points (interpreted as (x+, x-, p+, p-)).
    """
    if not V.is_quadratic:
        raise ValueError("decomposition requires V = -omega^2 X^2/2")
    w = _quad_omega(V)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    xp, xm, pp, pm = pts.T
    s, r = math.sqrt(2 * w), math.sqrt(w / 2)
    x = (xp + xm) / s
    D = r * (xp - xm)
    p = r * (pp + pm)
    P = (pp - pm) / s
    G = {g: GrassmannNumber.generator(g) for g in ("psi", "chi", "psibar", "chibar")}
    # new fermions expressed through the old ones (inverse of the substitution)
    psi_p = 0.5 * s * G["psi"] - G["chibar"] * (1 / (2 * r))
    psi_m = 0.5 * s * G["psi"] + G["chibar"] * (1 / (2 * r))
    psib_p = G["psibar"] * (1 / (2 * r)) - 0.5 * s * G["chi"]
    psib_m = G["psibar"] * (1 / (2 * r)) + 0.5 * s * G["chi"]
    dV = -w * w * x
    one = lambda v: GrassmannNumber.scalar(v)
    Q = G["psi"] * one(p + 1j * dV) - G["chibar"] * one(P - 1j * D)
    Qb = G["psibar"] * one(P + 1j * D) - G["chi"] * one(p - 1j * dV)
    H = one(p * P - D * dV) + G["psibar"] * G["chibar"] + (w * w) * (G["chi"] * G["psi"])
    Qp = psi_p * one(pp - 1j * w * xp)
    Qm = psi_m * one(pm - 1j * w * xm)
    Qbp = psib_p * one(pp + 1j * w * xp)
    Qbm = psib_m * one(pm + 1j * w * xm)
    Hp_b = 0.5 * (pp**2 + w * w * xp**2)
    Hm_b = 0.5 * (pm**2 + w * w * xm**2)
    Hp = one(Hp_b) + w * (psi_p * psib_p)
    Hm = one(Hm_b) + w * (psi_m * psib_m)
    # bracket of new coordinates as functions of the old ones
    xs = {"x+": (r, 1 / s), "x-": (r, -1 / s)}  # x+- = r x +- D/s
    ps = {"p+": (1 / (2 * r), s / 2), "p-": (1 / (2 * r), -s / 2)}  # p+- = p/(2r) +- s P/2
    X, Dc, Pc, Pp = (coordinate(n) for n in ("x", "D", "p", "P"))
    new = {"x+": r * X + (1 / s) * Dc, "x-": r * X - (1 / s) * Dc,
           "p+": (1 / (2 * r)) * Pc + (s / 2) * Pp, "p-": (1 / (2 * r)) * Pc - (s / 2) * Pp}
    old_pts = np.stack([x, D, p, P], axis=1)
    br = lambda a, b: c * bracket_jets(new[a].jet(old_pts), new[b].jet(old_pts)).c[:, 0]
    xp_base = c * bracket_jets(X.jet(old_pts), Pc.jet(old_pts)).c[:, 0]
    return {
        "Q": float(np.max(np.abs((Q - (Qp + Qm)).c))),
        "Qbar": float(np.max(np.abs((Qb - (Qbp - Qbm)).c))),
        "H": float(np.max(np.abs((H - (Hp - Hm)).c))),
        "H_plus_bosonic_min": float(np.min(Hp_b)),
        "bracket_xp_pp": float(np.max(np.abs(br("x+", "p+") - xp_base))),
        "bracket_xm_pm": float(np.max(np.abs(br("x-", "p-") - xp_base))),
        "bracket_xp_pm": float(np.max(np.abs(br("x+", "p-")))),
        "bracket_xm_pp": float(np.max(np.abs(br("x-", "p+")))),
    }
