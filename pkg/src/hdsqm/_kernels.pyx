# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, fabs, cosh, tanh, isfinite, pow, INFINITY

cnp.import_array()

cdef enum:
    PURE = 0
    MIXED = 1
    TWODOT = 2
    REDUCED = 3

cdef enum:
    COMPLETED = 0
    BLOWUP = 1
    UNDERFLOW = 2
    MAX_STEPS = 3

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40

DIMS = {PURE: 4, MIXED: 4, TWODOT: 6, REDUCED: 2}


cdef inline double horner(const double[::1] c, double x) nogil:
    cdef Py_ssize_t k
    cdef double r = 0.0
    for k in range(c.shape[0] - 1, -1, -1):
        r = r * x + c[k]
    return r


cdef void f_eval(int kind, const double[::1] dv1, const double[::1] dv2, double gamma,
                 const double* y, double* out) nogil:
    if kind == PURE:
        out[0] = y[3]
        out[1] = y[2]
        out[2] = y[1] * horner(dv2, y[0])
        out[3] = horner(dv1, y[0])
    elif kind == MIXED:
        out[0] = y[3]
        out[1] = y[2] - gamma * y[3]
        out[2] = y[1] * horner(dv2, y[0])
        out[3] = horner(dv1, y[0]) + gamma * y[1]
    elif kind == TWODOT:
        out[0] = y[1]
        out[1] = y[2]
        out[2] = y[3]
        out[3] = -y[4] * horner(dv2, y[0])
        out[4] = y[5]
        out[5] = horner(dv1, y[0])
    else:
        out[0] = y[1]
        out[1] = horner(dv1, y[0])


cdef void stages(int kind, const double[::1] dv1, const double[::1] dv2, double gamma,
                 int n, const double* y, double h, const double* k1,
                 double* ynew, double* err, double* k7, double* work) nogil:
    # work holds k2..k6 and a scratch vector: 6*n doubles
    cdef double* k2 = work
    cdef double* k3 = work + n
    cdef double* k4 = work + 2 * n
    cdef double* k5 = work + 3 * n
    cdef double* k6 = work + 4 * n
    cdef double* z = work + 5 * n
    cdef int i
    for i in range(n):
        z[i] = y[i] + h * A21 * k1[i]
    f_eval(kind, dv1, dv2, gamma, z, k2)
    for i in range(n):
        z[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
    f_eval(kind, dv1, dv2, gamma, z, k3)
    for i in range(n):
        z[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    f_eval(kind, dv1, dv2, gamma, z, k4)
    for i in range(n):
        z[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    f_eval(kind, dv1, dv2, gamma, z, k5)
    for i in range(n):
        z[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
    f_eval(kind, dv1, dv2, gamma, z, k6)
    for i in range(n):
        ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
    f_eval(kind, dv1, dv2, gamma, ynew, k7)
    for i in range(n):
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])


cdef double err_norm(int n, const double* y, const double* ynew, const double* err,
                     double rtol, double atol) nogil:
    cdef double s = 0.0, sc, a, b
    cdef int i
    for i in range(n):
        if not isfinite(ynew[i]):
            return INFINITY
        a = fabs(y[i])
        b = fabs(ynew[i])
        sc = atol + rtol * (a if a > b else b)
        s += (err[i] / sc) * (err[i] / sc)
    return sqrt(s / n)


def rhs(int kind, dv1, dv2, double gamma, y):
    cdef int n = DIMS[kind]
    cdef double[::1] c1 = np.ascontiguousarray(dv1, dtype=np.float64)
    cdef double[::1] c2 = np.ascontiguousarray(dv2 if dv2 is not None else [0.0], dtype=np.float64)
    cdef double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty(n)
    cdef double[::1] o = out
    f_eval(kind, c1, c2, gamma, &yy[0], &o[0])
    return out


def dp5_step(int kind, dv1, dv2, double gamma, y, double h):
    cdef int n = DIMS[kind]
    cdef double[::1] c1 = np.ascontiguousarray(dv1, dtype=np.float64)
    cdef double[::1] c2 = np.ascontiguousarray(dv2 if dv2 is not None else [0.0], dtype=np.float64)
    cdef double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    ynew = np.empty(n)
    err = np.empty(n)
    cdef double[::1] yn = ynew
    cdef double[::1] er = err
    cdef double[::1] k1 = np.empty(n)
    cdef double[::1] k7 = np.empty(n)
    cdef double[::1] work = np.empty(6 * n)
    f_eval(kind, c1, c2, gamma, &yy[0], &k1[0])
    stages(kind, c1, c2, gamma, n, &yy[0], h, &k1[0], &yn[0], &er[0], &k7[0], &work[0])
    return ynew, err


def dopri5(int kind, dv1, dv2, double gamma, y0, double t0, double t_end,
           double rtol, double atol, double h0, double guard, long max_steps):
    cdef int n = DIMS[kind]
    cdef double[::1] c1 = np.ascontiguousarray(dv1, dtype=np.float64)
    cdef double[::1] c2 = np.ascontiguousarray(dv2 if dv2 is not None else [0.0], dtype=np.float64)
    cdef double[::1] y = np.array(y0, dtype=np.float64)
    cdef double[::1] ynew = np.empty(n)
    cdef double[::1] err = np.empty(n)
    cdef double[::1] k1 = np.empty(n)
    cdef double[::1] k7 = np.empty(n)
    cdef double[::1] work = np.empty(6 * n)
    cdef long cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    hs = np.empty(cap)
    cdef double[::1] tv = ts
    cdef double[:, ::1] yv = ys
    cdef double[::1] hv = hs
    cdef double t = t0
    cdef double direction = 1.0 if t_end >= t0 else -1.0
    cdef double h = fabs(h0) if h0 > 0 else 1e-3
    cdef double remaining, en, fac, ymax
    cdef bint last
    cdef int status = COMPLETED
    cdef long rejected = 0, steps = 0, count = 1
    cdef int i
    tv[0] = t
    for i in range(n):
        yv[0, i] = y[i]
    hv[0] = 0.0
    f_eval(kind, c1, c2, gamma, &y[0], &k1[0])
    while direction * (t_end - t) > 0:
        if steps >= max_steps:
            status = MAX_STEPS
            break
        remaining = fabs(t_end - t)
        last = h >= remaining
        if last:
            h = remaining
        stages(kind, c1, c2, gamma, n, &y[0], direction * h, &k1[0], &ynew[0], &err[0], &k7[0], &work[0])
        en = err_norm(n, &y[0], &ynew[0], &err[0], rtol, atol)
        if en <= 1.0:
            if last:
                t = t_end
            else:
                t = t + direction * h
            ymax = 0.0
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
                if fabs(y[i]) > ymax:
                    ymax = fabs(y[i])
            steps += 1
            if count == cap:
                cap *= 2
                ts = np.resize(ts, cap)
                ys = np.resize(ys, (cap, n))
                hs = np.resize(hs, cap)
                tv = ts
                yv = ys
                hv = hs
            tv[count] = t
            for i in range(n):
                yv[count, i] = y[i]
            hv[count] = direction * h
            count += 1
            if ymax > guard:
                status = BLOWUP
                break
            if en == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * pow(en, -0.2)
                fac = 5.0 if fac > 5.0 else (0.2 if fac < 0.2 else fac)
            h *= fac
        else:
            rejected += 1
            if isfinite(en):
                fac = 0.9 * pow(en, -0.2)
                fac = 0.2 if fac < 0.2 else fac
            else:
                fac = 0.2
            h *= fac
            if h <= 1e-14 * (fabs(t) if fabs(t) > 1.0 else 1.0):
                status = UNDERFLOW
                break
    return ts[:count].copy(), ys[:count].copy(), hs[:count].copy(), status, rejected


def flow_batch(dv1, x, P, double t, double rtol, double atol):
    """Per-point adaptive integration of x' = P, P' = V'(x) to time t."""
    cdef double[::1] c1 = np.ascontiguousarray(dv1, dtype=np.float64)
    cdef double[::1] c2 = np.zeros(1)
    xa = np.ascontiguousarray(x, dtype=np.float64)
    shape = xa.shape
    cdef double[::1] xs = xa.ravel().copy()
    cdef double[::1] ps = np.ascontiguousarray(P, dtype=np.float64).ravel().copy()
    cdef Py_ssize_t npt = xs.shape[0], j
    cdef double y[2]
    cdef double yn[2]
    cdef double er[2]
    cdef double k1[2]
    cdef double k7[2]
    cdef double work[12]
    cdef double direction = 1.0 if t > 0 else -1.0
    cdef double T = fabs(t), s, h, en, fac
    cdef bint last
    cdef int bad = 0
    if T == 0.0:
        return np.asarray(xs).reshape(shape), np.asarray(ps).reshape(shape)
    with nogil:
        for j in range(npt):
            y[0] = xs[j]
            y[1] = ps[j]
            s = 0.0
            h = T if T < 1e-2 else 1e-2
            f_eval(REDUCED, c1, c2, 0.0, y, k1)
            while s < T:
                last = h >= T - s
                if last:
                    h = T - s
                stages(REDUCED, c1, c2, 0.0, 2, y, direction * h, k1, yn, er, k7, work)
                en = err_norm(2, y, yn, er, rtol, atol)
                if en <= 1.0:
                    if last:
                        s = T
                    else:
                        s = s + h
                    y[0] = yn[0]
                    y[1] = yn[1]
                    k1[0] = k7[0]
                    k1[1] = k7[1]
                    if en == 0.0:
                        fac = 5.0
                    else:
                        fac = 0.9 * pow(en, -0.2)
                        fac = 5.0 if fac > 5.0 else (0.2 if fac < 0.2 else fac)
                    h *= fac
                else:
                    if isfinite(en):
                        fac = 0.9 * pow(en, -0.2)
                        fac = 0.2 if fac < 0.2 else fac
                    else:
                        fac = 0.2
                    h *= fac
                    if h < 1e-14 * T:
                        bad = 1
                        break
            xs[j] = y[0]
            ps[j] = y[1]
    if bad:
        raise FloatingPointError("step size underflow in flow_batch")
    return np.asarray(xs).reshape(shape), np.asarray(ps).reshape(shape)


def sncndn(u, double m):
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64).ravel()
    shape = np.shape(u)
    cdef Py_ssize_t npt = uu.shape[0], j
    sn_a = np.empty(npt)
    cn_a = np.empty(npt)
    dn_a = np.empty(npt)
    cdef double[::1] snv = sn_a
    cdef double[::1] cnv = cn_a
    cdef double[::1] dnv = dn_a
    cdef double em[16]
    cdef double en[16]
    cdef double emc = 1.0 - m, a = 1.0, c = 1.0, b, d, v, sn, cn, dn, cc
    cdef int i, l = 0, ii
    if emc == 0.0:
        for j in range(npt):
            cn = 1.0 / cosh(uu[j])
            snv[j] = tanh(uu[j])
            cnv[j] = cn
            dnv[j] = cn
        return sn_a.reshape(shape), cn_a.reshape(shape), dn_a.reshape(shape)
    for i in range(16):
        l = i
        em[i] = a
        emc = sqrt(emc)
        en[i] = emc
        c = 0.5 * (a + emc)
        if fabs(a - emc) <= 1e-9 * a:
            break
        emc *= a
        a = c
    with nogil:
        for j in range(npt):
            v = c * uu[j]
            sn = sin(v)
            cn = cos(v)
            dn = 1.0
            if sn != 0.0:
                a = cn / sn
                cc = c * a
                for ii in range(l, -1, -1):
                    b = em[ii]
                    a = a * cc
                    cc = cc * dn
                    dn = (en[ii] + a) / (b + a)
                    a = cc / b
                a = 1.0 / sqrt(cc * cc + 1.0)
                sn = a if sn >= 0.0 else -a
                cn = cc * sn
            snv[j] = sn
            cnv[j] = cn
            dnv[j] = dn
    return sn_a.reshape(shape), cn_a.reshape(shape), dn_a.reshape(shape)
