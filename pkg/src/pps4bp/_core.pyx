# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernels for the regularized flow and its variational equations.

Mirrors the derivative structure of :mod:`pps4bp.model` term by term.  All
loops run without the GIL; results are bit-reproducible for fixed inputs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, isfinite

cnp.import_array()


cdef inline void _sym_outer(double* H, const double* x, const double* y, double c) noexcept nogil:
    cdef int i, j
    for i in range(8):
        for j in range(8):
            H[8 * i + j] += c * (x[i] * y[j] + y[i] * x[j])


cdef int _radial(const double* u, double sgn, double* f, double* df, double* d2f) noexcept nogil:
    # value, gradient (4) and Hessian (4x4) of ab / |U1^2 + sgn U3^2|
    cdef double u1 = u[0], u2 = u[1], u3 = u[2], u4 = u[3]
    cdef double a = u1 * u1 + u2 * u2
    cdef double b = u3 * u3 + u4 * u4
    cdef double g = a * b
    cdef double dg[4]
    cdef double da[4]
    cdef double db[4]
    cdef double dmr[4]
    cdef double dmi[4]
    cdef double dq[4]
    cdef double d2g[16]
    cdef double d2q[16]
    cdef int i, j
    da[0] = 2 * u1; da[1] = 2 * u2; da[2] = 0.0; da[3] = 0.0
    db[0] = 0.0; db[1] = 0.0; db[2] = 2 * u3; db[3] = 2 * u4
    for i in range(4):
        dg[i] = b * da[i] + a * db[i]
    for i in range(16):
        d2g[i] = 0.0
        d2q[i] = 0.0
    d2g[0] = 2 * b; d2g[5] = 2 * b; d2g[10] = 2 * a; d2g[15] = 2 * a
    for i in range(4):
        for j in range(4):
            d2g[4 * i + j] += da[i] * db[j] + db[i] * da[j]

    cdef double mr = u1 * u1 - u2 * u2 + sgn * (u3 * u3 - u4 * u4)
    cdef double mi = 2 * u1 * u2 + sgn * 2 * u3 * u4
    dmr[0] = 2 * u1; dmr[1] = -2 * u2; dmr[2] = sgn * 2 * u3; dmr[3] = -sgn * 2 * u4
    dmi[0] = 2 * u2; dmi[1] = 2 * u1; dmi[2] = sgn * 2 * u4; dmi[3] = sgn * 2 * u3
    cdef double q = mr * mr + mi * mi
    if q == 0.0:
        return -1
    for i in range(4):
        dq[i] = 2 * mr * dmr[i] + 2 * mi * dmi[i]
    for i in range(4):
        for j in range(4):
            d2q[4 * i + j] = 2 * (dmr[i] * dmr[j] + dmi[i] * dmi[j])
    d2q[0] += 4 * mr
    d2q[5] -= 4 * mr
    d2q[10] += 4 * mr * sgn
    d2q[15] -= 4 * mr * sgn
    d2q[1] += 4 * mi
    d2q[4] += 4 * mi
    d2q[11] += 4 * mi * sgn
    d2q[14] += 4 * mi * sgn

    cdef double r = sqrt(q)
    cdef double q32 = q * r
    f[0] = g / r
    for i in range(4):
        df[i] = dg[i] / r - 0.5 * g / q32 * dq[i]
    if d2f != NULL:
        for i in range(4):
            for j in range(4):
                d2f[4 * i + j] = (
                    d2g[4 * i + j] / r
                    - 0.5 / q32 * (dg[i] * dq[j] + dq[i] * dg[j])
                    - 0.5 * g / q32 * d2q[4 * i + j]
                    + 0.75 * g / (q32 * q) * dq[i] * dq[j]
                )
    return 0


cdef int _derivs(const double* z, double m, double E, double* grad, double* hess) noexcept nogil:
    """Gradient (8) and, if hess != NULL, Hessian (8x8 row-major) of gamma_hat."""
    cdef double u1 = z[0], u2 = z[1], u3 = z[2], u4 = z[3]
    cdef double v1 = z[4], v2 = z[5], v3 = z[6], v4 = z[7]
    cdef double c1 = (1.0 + 1.0 / m) / 16.0
    cdef double c2 = (1.0 - 1.0 / m) / 8.0
    cdef double a = u1 * u1 + u2 * u2
    cdef double b = u3 * u3 + u4 * u4
    cdef double V1 = v1 * v1 + v2 * v2
    cdef double V3 = v3 * v3 + v4 * v4
    cdef double M1 = v1 * u1 - v2 * u2
    cdef double M2 = v1 * u2 + v2 * u1
    cdef double M3 = v3 * u3 - v4 * u4
    cdef double M4 = v3 * u4 + v4 * u3
    cdef double f5, f7
    cdef double df5[4]
    cdef double df7[4]
    cdef double d2f5[16]
    cdef double d2f7[16]
    cdef double da[8]
    cdef double db[8]
    cdef double dV1[8]
    cdef double dV3[8]
    cdef double dM1[8]
    cdef double dM2[8]
    cdef double dM3[8]
    cdef double dM4[8]
    cdef int i, j
    cdef bint want_h = hess != NULL

    if _radial(z, 1.0, &f5, df5, d2f5 if want_h else NULL) != 0:
        return -1
    if _radial(z, -1.0, &f7, df7, d2f7 if want_h else NULL) != 0:
        return -1

    grad[0] = c1 * 2 * u1 * V3 + c2 * (M3 * v1 + M4 * v2)
    grad[1] = c1 * 2 * u2 * V3 + c2 * (-M3 * v2 + M4 * v1)
    grad[2] = c1 * 2 * u3 * V1 + c2 * (M1 * v3 + M2 * v4)
    grad[3] = c1 * 2 * u4 * V1 + c2 * (-M1 * v4 + M2 * v3)
    grad[4] = c1 * 2 * v1 * b + c2 * (M3 * u1 + M4 * u2)
    grad[5] = c1 * 2 * v2 * b + c2 * (-M3 * u2 + M4 * u1)
    grad[6] = c1 * 2 * v3 * a + c2 * (M1 * u3 + M2 * u4)
    grad[7] = c1 * 2 * v4 * a + c2 * (-M1 * u4 + M2 * u3)
    grad[0] += -df5[0] - 4.0 * m * u1 - m * m * df7[0] - E * 2 * u1 * b
    grad[1] += -df5[1] - 4.0 * m * u2 - m * m * df7[1] - E * 2 * u2 * b
    grad[2] += -df5[2] - 4.0 * m * u3 - m * m * df7[2] - E * 2 * u3 * a
    grad[3] += -df5[3] - 4.0 * m * u4 - m * m * df7[3] - E * 2 * u4 * a

    if not want_h:
        return 0

    for i in range(64):
        hess[i] = 0.0
    for i in range(8):
        da[i] = 0.0; db[i] = 0.0; dV1[i] = 0.0; dV3[i] = 0.0
        dM1[i] = 0.0; dM2[i] = 0.0; dM3[i] = 0.0; dM4[i] = 0.0
    da[0] = 2 * u1; da[1] = 2 * u2
    db[2] = 2 * u3; db[3] = 2 * u4
    dV1[4] = 2 * v1; dV1[5] = 2 * v2
    dV3[6] = 2 * v3; dV3[7] = 2 * v4
    dM1[0] = v1; dM1[1] = -v2; dM1[4] = u1; dM1[5] = -u2
    dM2[0] = v2; dM2[1] = v1; dM2[4] = u2; dM2[5] = u1
    dM3[2] = v3; dM3[3] = -v4; dM3[6] = u3; dM3[7] = -u4
    dM4[2] = v4; dM4[3] = v3; dM4[6] = u4; dM4[7] = u3

    # c1 (V1 b + V3 a)
    hess[0] += c1 * 2 * V3
    hess[9] += c1 * 2 * V3
    hess[18] += c1 * 2 * V1
    hess[27] += c1 * 2 * V1
    hess[36] += c1 * 2 * b
    hess[45] += c1 * 2 * b
    hess[54] += c1 * 2 * a
    hess[63] += c1 * 2 * a
    _sym_outer(hess, db, dV1, c1)
    _sym_outer(hess, da, dV3, c1)

    # c2 (M1 M3 + M2 M4); constant second derivatives of the bilinear forms
    _sym_outer(hess, dM1, dM3, c2)
    _sym_outer(hess, dM2, dM4, c2)
    # M3 * d2M1: (0,4) = 1, (1,5) = -1
    hess[4] += c2 * M3; hess[32] += c2 * M3
    hess[13] -= c2 * M3; hess[41] -= c2 * M3
    # M4 * d2M2: (1,4) = 1, (0,5) = 1
    hess[12] += c2 * M4; hess[33] += c2 * M4
    hess[5] += c2 * M4; hess[40] += c2 * M4
    # M1 * d2M3: (2,6) = 1, (3,7) = -1
    hess[22] += c2 * M1; hess[50] += c2 * M1
    hess[31] -= c2 * M1; hess[59] -= c2 * M1
    # M2 * d2M4: (3,6) = 1, (2,7) = 1
    hess[30] += c2 * M2; hess[51] += c2 * M2
    hess[23] += c2 * M2; hess[58] += c2 * M2

    # u-only potential
    for i in range(4):
        for j in range(4):
            hess[8 * i + j] += -d2f5[4 * i + j] - m * m * d2f7[4 * i + j] - E * (da[i] * db[j] + db[i] * da[j])
        hess[9 * i] -= 4.0 * m
    hess[0] -= E * 2 * b
    hess[9] -= E * 2 * b
    hess[18] -= E * 2 * a
    hess[27] -= E * 2 * a

    # enforce exact symmetry
    cdef double s
    for i in range(8):
        for j in range(i + 1, 8):
            s = 0.5 * (hess[8 * i + j] + hess[8 * j + i])
            hess[8 * i + j] = s
            hess[8 * j + i] = s
    return 0


cdef inline int _field(const double* z, double m, double E, double* dz) noexcept nogil:
    cdef double g[8]
    cdef int i
    if _derivs(z, m, E, g, NULL) != 0:
        return -1
    for i in range(4):
        dz[i] = g[i + 4]
        dz[i + 4] = -g[i]
    return 0


cdef inline double _dtds(const double* z) noexcept nogil:
    return (z[0] * z[0] + z[1] * z[1]) * (z[2] * z[2] + z[3] * z[3])


cdef int _coupled_rhs(const double* z, const double* Y, int ncol, double m, double E,
                      double* dz, double* dY) noexcept nogil:
    # Y is 8 x ncol row-major; a ninth column carries d z / d E_hat and picks
    # up the forcing J grad(d gamma_hat / d E_hat) = (0, 0, 0, 0, 2 u1 b, 2 u2 b, 2 u3 a, 2 u4 a)
    cdef double g[8]
    cdef double H[64]
    cdef double acc
    cdef double a, b
    cdef int i, j, k, row
    if _derivs(z, m, E, g, H) != 0:
        return -1
    for i in range(4):
        dz[i] = g[i + 4]
        dz[i + 4] = -g[i]
    # (J H Y)[i] = (H Y)[i + 4] for i < 4 and -(H Y)[i - 4] otherwise
    for i in range(8):
        row = i + 4 if i < 4 else i - 4
        for j in range(ncol):
            acc = 0.0
            for k in range(8):
                acc += H[8 * row + k] * Y[ncol * k + j]
            dY[ncol * i + j] = acc if i < 4 else -acc
    if ncol == 9:
        a = z[0] * z[0] + z[1] * z[1]
        b = z[2] * z[2] + z[3] * z[3]
        dY[9 * 4 + 8] += 2 * z[0] * b
        dY[9 * 5 + 8] += 2 * z[1] * b
        dY[9 * 6 + 8] += 2 * z[2] * a
        dY[9 * 7 + 8] += 2 * z[3] * a
    return 0


cdef int _rk4_state(double* z, double* t, double h, double m, double E) noexcept nogil:
    cdef double k1[8]
    cdef double k2[8]
    cdef double k3[8]
    cdef double k4[8]
    cdef double w[8]
    cdef double t1, t2, t3, t4
    cdef int i
    t1 = _dtds(z)
    if _field(z, m, E, k1) != 0:
        return -1
    for i in range(8):
        w[i] = z[i] + 0.5 * h * k1[i]
    t2 = _dtds(w)
    if _field(w, m, E, k2) != 0:
        return -1
    for i in range(8):
        w[i] = z[i] + 0.5 * h * k2[i]
    t3 = _dtds(w)
    if _field(w, m, E, k3) != 0:
        return -1
    for i in range(8):
        w[i] = z[i] + h * k3[i]
    t4 = _dtds(w)
    if _field(w, m, E, k4) != 0:
        return -1
    for i in range(8):
        z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    t[0] += h / 6.0 * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
    return 0


cdef int _rk4_coupled(double* z, double* Y, int ncol, double* t, double h, double m, double E) noexcept nogil:
    cdef double kz[4][8]
    cdef double kY[4][72]
    cdef double w[8]
    cdef double W[72]
    cdef double tk[4]
    cdef double c
    cdef int s, i
    cdef int ny = 8 * ncol
    for s in range(4):
        if s == 0:
            for i in range(8):
                w[i] = z[i]
            for i in range(ny):
                W[i] = Y[i]
        else:
            c = h if s == 3 else 0.5 * h
            for i in range(8):
                w[i] = z[i] + c * kz[s - 1][i]
            for i in range(ny):
                W[i] = Y[i] + c * kY[s - 1][i]
        tk[s] = _dtds(w)
        if _coupled_rhs(w, W, ncol, m, E, kz[s], kY[s]) != 0:
            return -1
    for i in range(8):
        z[i] += h / 6.0 * (kz[0][i] + 2.0 * kz[1][i] + 2.0 * kz[2][i] + kz[3][i])
    for i in range(ny):
        Y[i] += h / 6.0 * (kY[0][i] + 2.0 * kY[1][i] + 2.0 * kY[2][i] + kY[3][i])
    t[0] += h / 6.0 * (tk[0] + 2.0 * tk[1] + 2.0 * tk[2] + tk[3])
    return 0


cdef bint _all_finite(const double* x, int n) noexcept nogil:
    cdef int i
    for i in range(n):
        if not isfinite(x[i]):
            return False
    return True


class KernelError(ArithmeticError):
    """Singular configuration or non-finite value met inside a compiled loop."""


def _raise(int code, long step):
    if code == -1:
        raise KernelError(f"singular configuration at step {step}")
    raise KernelError(f"non-finite state at step {step}")


# ---------------------------------------------------------------------------
# Python-visible entry points


def _matrix(Y):
    Y = np.array(Y, dtype=np.float64, order="C")
    if Y.ndim != 2 or Y.shape[0] != 8 or Y.shape[1] not in (8, 9):
        raise ValueError(f"variational matrix must be 8x8 or 8x9, got {Y.shape}")
    return Y


def derivatives(z, double m, double E, bint hessian=True):
    """Return (grad, hess) from the compiled derivative code; hess is None if not requested."""
    cdef double[::1] zz = np.ascontiguousarray(z, dtype=np.float64)
    g = np.empty(8)
    cdef double[::1] gv = g
    H = np.empty((8, 8)) if hessian else None
    cdef double[:, ::1] Hv
    cdef int rc
    if hessian:
        Hv = H
        rc = _derivs(&zz[0], m, E, &gv[0], &Hv[0, 0])
    else:
        rc = _derivs(&zz[0], m, E, &gv[0], NULL)
    if rc != 0:
        _raise(-1, 0)
    return g, H


def rk4_step(z, Y, double t, double h, double m, double E):
    """One coupled step; ``Y`` may be None. Returns (z, Y, t)."""
    zn = np.array(z, dtype=np.float64)
    cdef double[::1] zv = zn
    cdef double tt = t
    cdef double[:, ::1] Yv
    cdef int rc
    if Y is None:
        rc = _rk4_state(&zv[0], &tt, h, m, E)
        Yn = None
    else:
        Yn = _matrix(Y)
        Yv = Yn
        rc = _rk4_coupled(&zv[0], &Yv[0, 0], Yn.shape[1], &tt, h, m, E)
    if rc != 0:
        _raise(rc, 0)
    return zn, Yn, tt


def flow(z0, double m, double E, double h, long steps, double t0=0.0):
    """Advance ``steps`` RK4 steps of the state and physical time. Returns (z, t)."""
    zn = np.array(z0, dtype=np.float64)
    cdef double[::1] zv = zn
    cdef double t = t0
    cdef long n = 0
    cdef int rc = 0
    with nogil:
        for n in range(steps):
            rc = _rk4_state(&zv[0], &t, h, m, E)
            if rc == 0 and not _all_finite(&zv[0], 8):
                rc = -2
            if rc != 0:
                break
    if rc != 0:
        _raise(rc, n)
    return zn, t


def flow_variational(z0, Y0, double m, double E, double h, long steps, double t0=0.0):
    """Advance state, fundamental matrix and physical time. Returns (z, Y, t).

    ``Y0`` is 8x8, or 8x9 with the last column the energy sensitivity dz/dE_hat.
    """
    zn = np.array(z0, dtype=np.float64)
    Yn = _matrix(Y0)
    cdef double[::1] zv = zn
    cdef double[:, ::1] Yv = Yn
    cdef int ncol = Yn.shape[1]
    cdef double t = t0
    cdef long n = 0
    cdef int rc = 0
    with nogil:
        for n in range(steps):
            rc = _rk4_coupled(&zv[0], &Yv[0, 0], ncol, &t, h, m, E)
            if rc == 0 and not (_all_finite(&zv[0], 8) and _all_finite(&Yv[0, 0], 8 * ncol)):
                rc = -2
            if rc != 0:
                break
    if rc != 0:
        _raise(rc, n)
    return zn, Yn, t


def sample(z0, double m, double E, double h, long steps, long stride, double t0=0.0):
    """States and times at every ``stride``-th step, endpoints included.

    Returns (index, z, t) arrays of shapes (k,), (k, 8), (k,).
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    idx = list(range(0, steps + 1, stride))
    if idx[len(idx) - 1] != steps:
        idx.append(steps)
    out_i = np.asarray(idx, dtype=np.int64)
    out_z = np.empty((len(idx), 8))
    out_t = np.empty(len(idx))
    zn = np.array(z0, dtype=np.float64)
    cdef double[::1] zv = zn
    cdef double t = t0
    cdef long j, n, todo
    cdef long done = 0
    cdef int rc = 0
    out_z[0] = zn
    out_t[0] = t
    for j in range(1, len(idx)):
        todo = idx[j] - idx[j - 1]
        with nogil:
            for n in range(todo):
                rc = _rk4_state(&zv[0], &t, h, m, E)
                if rc == 0 and not _all_finite(&zv[0], 8):
                    rc = -2
                if rc != 0:
                    break
                done += 1
        if rc != 0:
            _raise(rc, done)
        out_z[j] = zn
        out_t[j] = t
    return out_i, out_z, out_t
