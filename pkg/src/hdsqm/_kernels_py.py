"""Pure-Python/numpy implementations of the hot kernels.

This module mirrors ``_kernels.pyx`` function for function. It is used when
the compiled extension is unavailable or when ``HDSQM_PURE_PYTHON=1``.
"""
import math

import numpy as np

# model kinds understood by the integrator kernels
PURE, MIXED, TWODOT, REDUCED = 0, 1, 2, 3
DIMS = {PURE: 4, MIXED: 4, TWODOT: 6, REDUCED: 2}

# integrator status codes
COMPLETED, BLOWUP, UNDERFLOW, MAX_STEPS = 0, 1, 2, 3

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

_AGM_TOL = 1e-9


def _horner(c, x):
    r = 0.0 * x
    for ck in c[::-1]:
        r = r * x + ck
    return r


def rhs(kind, dv1, dv2, gamma, y):
    """Right-hand side for one state (or a batch along the last axis)."""
    if kind == PURE:
        x, D, p, P = y
        return np.array([P, p, D * _horner(dv2, x), _horner(dv1, x)])
    if kind == MIXED:
        x, D, p, P = y
        return np.array([P, p - gamma * P, D * _horner(dv2, x), _horner(dv1, x) + gamma * D])
    if kind == TWODOT:
        x, x1, x2, x3, D, D1 = y
        return np.array([x1, x2, x3, -D * _horner(dv2, x), D1, _horner(dv1, x)])
    if kind == REDUCED:
        x, P = y
        return np.array([P, _horner(dv1, x)])
    raise ValueError(f"unknown model kind {kind}")


def _stages(kind, dv1, dv2, gamma, y, h, k1):
    f = lambda z: rhs(kind, dv1, dv2, gamma, z)
    k2 = f(y + h * (A21 * k1))
    k3 = f(y + h * (A31 * k1 + A32 * k2))
    k4 = f(y + h * (A41 * k1 + A42 * k2 + A43 * k3))
    k5 = f(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
    k6 = f(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
    ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
    k7 = f(ynew)
    err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
    return ynew, err, k7


def dp5_step(kind, dv1, dv2, gamma, y, h):
    """One Dormand-Prince step of size h from y. Returns (y_new, error_estimate)."""
    y = np.asarray(y, dtype=float)
    k1 = rhs(kind, dv1, dv2, gamma, y)
    ynew, err, _ = _stages(kind, dv1, dv2, gamma, y, h, k1)
    return ynew, err


def dopri5(kind, dv1, dv2, gamma, y0, t0, t_end, rtol, atol, h0, guard, max_steps):
    """Adaptive DP5(4) integration recording every accepted step.

    Returns ``(ts, ys, hs, status, n_rejected)``; ``hs[i]`` is the step that
    produced sample ``i`` (0 for the initial sample).
    """
    dv1 = np.asarray(dv1, dtype=float)
    dv2 = np.asarray(dv2, dtype=float)
    y = np.array(y0, dtype=float)
    t = float(t0)
    direction = 1.0 if t_end >= t0 else -1.0
    h = abs(h0) if h0 > 0 else 1e-3
    ts, ys, hs = [t], [y.copy()], [0.0]
    k1 = rhs(kind, dv1, dv2, gamma, y)
    status = COMPLETED
    rejected = 0
    steps = 0
    hmin_rel = 1e-14
    while direction * (t_end - t) > 0:
        if steps >= max_steps:
            status = MAX_STEPS
            break
        remaining = abs(t_end - t)
        last = h >= remaining
        if last:
            h = remaining
        ynew, err, k7 = _stages(kind, dv1, dv2, gamma, y, direction * h, k1)
        if not np.all(np.isfinite(ynew)):
            en = math.inf
        else:
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
            en = math.sqrt(float(np.mean((err / sc) ** 2)))
        if en <= 1.0:
            t = t_end if last else t + direction * h
            y = ynew
            k1 = k7
            steps += 1
            ts.append(t)
            ys.append(y.copy())
            hs.append(direction * h)
            if np.max(np.abs(y)) > guard:
                status = BLOWUP
                break
            fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            h *= fac
        else:
            rejected += 1
            fac = 0.2 if not math.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
            h *= fac
            if h <= hmin_rel * max(1.0, abs(t)):
                status = UNDERFLOW
                break
    return np.array(ts), np.array(ys), np.array(hs), status, rejected


def flow_batch(dv1, x, P, t, rtol, atol):
    """Integrate the reduced flow x' = P, P' = V'(x) for many points to time t.

    Vectorised over points with a shared step size (error norm is the max over
    the batch), so every point gets at least the requested accuracy.
    """
    dv1 = np.asarray(dv1, dtype=float)
    y = np.vstack([np.asarray(x, dtype=float).ravel(), np.asarray(P, dtype=float).ravel()])
    shape = np.shape(x)
    if t == 0:
        return y[0].reshape(shape), y[1].reshape(shape)
    direction = 1.0 if t > 0 else -1.0
    T = abs(t)
    s = 0.0
    h = min(T, 1e-2)
    k1 = rhs(REDUCED, dv1, None, 0.0, y)
    while s < T:
        last = h >= T - s
        if last:
            h = T - s
        ynew, err, k7 = _stages(REDUCED, dv1, None, 0.0, y, direction * h, k1)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        en = float(np.max(np.sqrt(np.mean((err / sc) ** 2, axis=0)))) if y.size else 0.0
        if not math.isfinite(en):
            en = math.inf
        if en <= 1.0:
            s = T if last else s + h
            y = ynew
            k1 = k7
            h *= 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
        else:
            h *= 0.2 if not math.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
            if h < 1e-14 * T:
                raise FloatingPointError("step size underflow in flow_batch")
    return y[0].reshape(shape), y[1].reshape(shape)


def sncndn(u, m):
    """Jacobi sn, cn, dn for an array of arguments and a scalar parameter m.

    Gauss/Landen descending transformation on the complementary parameter
    1 - m, as in the classic sncndn routine.
    """
    shape = np.shape(u)
    u = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
    emc = 1.0 - m
    if emc == 0.0:
        cn = 1.0 / np.cosh(u)
        return np.tanh(u).reshape(shape), cn.reshape(shape), cn.copy().reshape(shape)
    em, en = [], []
    a = 1.0
    c = 1.0
    for _ in range(16):
        em.append(a)
        emc = math.sqrt(emc)
        en.append(emc)
        c = 0.5 * (a + emc)
        if abs(a - emc) <= _AGM_TOL * a:
            break
        emc *= a
        a = c
    v = c * u
    sn = np.sin(v)
    cn = np.cos(v)
    dn = np.ones_like(v)
    nz = sn != 0.0
    if np.any(nz):
        snz = sn[nz]
        a = cn[nz] / snz
        cc = c * a
        dd = np.ones_like(a)
        for b, e in zip(reversed(em), reversed(en)):
            a = cc * a
            cc = cc * dd
            dd = (e + a) / (b + a)
            a = cc / b
        a = 1.0 / np.sqrt(cc * cc + 1.0)
        s = np.where(snz >= 0.0, a, -a)
        sn[nz] = s
        cn[nz] = cc * s
        dn[nz] = dd
    return sn.reshape(shape), cn.reshape(shape), dn.reshape(shape)
