# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: packed-polynomial evaluation and the DP5(4)
integrator for the coupled flow/cocycle system.

Keep the algorithm in lockstep with `_poly_py`; the two are selected
interchangeably at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

IMPL = "cython"

OK = 0
ESCAPED = 1
STIFF = 2
BLOWUP = 3

cdef double _BLOWUP_GUARD = 1e250

cdef double _C2 = 1.0 / 5, _C3 = 3.0 / 10, _C4 = 4.0 / 5, _C5 = 8.0 / 9

cdef double _A21 = 1.0 / 5
cdef double _A31 = 3.0 / 40, _A32 = 9.0 / 40
cdef double _A41 = 44.0 / 45, _A42 = -56.0 / 15, _A43 = 32.0 / 9
cdef double _A51 = 19372.0 / 6561, _A52 = -25360.0 / 2187
cdef double _A53 = 64448.0 / 6561, _A54 = -212.0 / 729
cdef double _A61 = 9017.0 / 3168, _A62 = -355.0 / 33, _A63 = 46732.0 / 5247
cdef double _A64 = 49.0 / 176, _A65 = -5103.0 / 18656
cdef double _B1 = 35.0 / 384, _B3 = 500.0 / 1113, _B4 = 125.0 / 192
cdef double _B5 = -2187.0 / 6784, _B6 = 11.0 / 84
cdef double _E1 = 71.0 / 57600, _E3 = -71.0 / 16695, _E4 = 71.0 / 1920
cdef double _E5 = -17253.0 / 339200, _E6 = 22.0 / 525, _E7 = -1.0 / 40


cdef inline void _poly_eval_c(const long long[:, :] exps,
                              const double complex[:, :] coeffs,
                              const double complex[:] dx,
                              double complex[:] out) nogil:
    cdef Py_ssize_t nt = exps.shape[0], dim = exps.shape[1], nout = coeffs.shape[1]
    cdef Py_ssize_t t, d, o
    cdef long long e, j
    cdef double complex mon
    for o in range(nout):
        out[o] = 0
    for t in range(nt):
        mon = 1
        for d in range(dim):
            e = exps[t, d]
            for j in range(e):
                mon = mon * dx[d]
        for o in range(nout):
            out[o] = out[o] + mon * coeffs[t, o]


def poly_eval(exps, coeffs, dx):
    """Evaluate the packed polynomial at offset dx; flat (nout,) result."""
    cdef cnp.ndarray out = np.zeros(coeffs.shape[1], dtype=complex)
    _poly_eval_c(exps, coeffs, dx, out)
    return out


def poly_dderiv(exps, coeffs, dx, h):
    """Exact directional derivative of the packed polynomial along h."""
    cdef const long long[:, :] ev = exps
    cdef const double complex[:, :] cv = coeffs
    cdef const double complex[:] dxv = dx
    cdef const double complex[:] hv = h
    cdef Py_ssize_t nt = ev.shape[0], dim = ev.shape[1], nout = cv.shape[1]
    cdef cnp.ndarray out_arr = np.zeros(nout, dtype=complex)
    cdef double complex[:] out = out_arr
    cdef Py_ssize_t t, d, o, m
    cdef long long e, j
    cdef double complex mon, w
    for m in range(dim):
        for t in range(nt):
            e = ev[t, m]
            if e == 0:
                continue
            mon = 1
            for d in range(dim):
                j = ev[t, d]
                if d == m:
                    j = j - 1
                while j > 0:
                    mon = mon * dxv[d]
                    j = j - 1
            w = e * mon * hv[m]
            for o in range(nout):
                out[o] = out[o] + w * cv[t, o]
    return out_arr


cdef void _rhs_c(const double complex[:] y,
                 Py_ssize_t dim, Py_ssize_t adim,
                 const long long[:, :] fexps, const double complex[:, :] fcoefs,
                 const long long[:, :] bexps, const double complex[:, :] bcoefs,
                 const double complex[:] center,
                 double complex[:] dx, double complex[:] bflat,
                 double complex[:] dy) nogil:
    cdef Py_ssize_t i, j, k
    cdef double complex acc
    for i in range(dim):
        dx[i] = y[i] - center[i]
    _poly_eval_c(fexps, fcoefs, dx, dy[:dim])
    if adim > 0:
        _poly_eval_c(bexps, bcoefs, dx, bflat)
        for i in range(adim):
            for j in range(adim):
                acc = 0
                for k in range(adim):
                    acc = acc + bflat[i * adim + k] * y[dim + k * adim + j]
                dy[dim + i * adim + j] = acc


def evolve_poly(fexps, fcoefs, bexps, bcoefs, center, y0, t_out,
                double rtol, double atol, int norm_kind, double hmax):
    """Adaptive DP5(4) integration of u' = f(u) [, V' = B(u) V].

    Same contract as the python fallback: returns (Y, status, t_stop).
    """
    cdef const long long[:, :] fe = np.ascontiguousarray(fexps, dtype=np.int64)
    cdef const double complex[:, :] fc = np.ascontiguousarray(fcoefs, dtype=complex)
    cdef bint coupled = bexps is not None
    cdef const long long[:, :] be
    cdef const double complex[:, :] bc
    cdef Py_ssize_t dim = fc.shape[1]
    cdef Py_ssize_t adim = 0
    cdef cnp.ndarray y0a = np.ascontiguousarray(y0, dtype=complex)
    cdef Py_ssize_t n = y0a.shape[0]
    if coupled:
        be = np.ascontiguousarray(bexps, dtype=np.int64)
        bc = np.ascontiguousarray(bcoefs, dtype=complex)
        adim = <Py_ssize_t> round(sqrt(<double> (n - dim)))
    else:
        be = np.zeros((0, 1), dtype=np.int64)
        bc = np.zeros((0, 1), dtype=complex)
    cdef const double complex[:] cen = np.ascontiguousarray(center, dtype=complex)
    cdef cnp.ndarray t_arr = np.ascontiguousarray(t_out, dtype=float)
    cdef const double[:] ts = t_arr
    cdef Py_ssize_t nt = ts.shape[0]

    cdef cnp.ndarray Y_arr = np.full((nt, n), np.nan, dtype=complex)
    cdef double complex[:, :] Y = Y_arr

    cdef cnp.ndarray work = np.zeros((11, n), dtype=complex)
    cdef double complex[:, :] K = work[:7]
    cdef double complex[:] y = work[7]
    cdef double complex[:] yi = work[8]
    cdef double complex[:] ynew = work[9]
    cdef double complex[:] errv = work[10]
    cdef cnp.ndarray scratch = np.zeros((2, max(n, 1)), dtype=complex)
    cdef double complex[:] dxbuf = scratch[0, :dim]
    cdef double complex[:] bbuf = scratch[1, :adim * adim] if coupled else scratch[1, :0]

    cdef Py_ssize_t i, j, iout = 0
    cdef double t = 0.0, h, t_goal, err, sc, ay, any_, factor, d0, d1, vn
    cdef bint clipped
    cdef int status = OK

    for i in range(n):
        y[i] = y0a[i]
    while iout < nt and ts[iout] <= 1e-300:
        for i in range(n):
            Y[iout, i] = y[i]
        iout += 1
    if iout >= nt:
        return Y_arr, OK, t

    _rhs_c(y, dim, adim, fe, fc, be, bc, cen, dxbuf, bbuf, K[0])

    d0 = 0
    d1 = 0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(K[0, i]) / sc) ** 2
    d0 = sqrt(d0 / n)
    d1 = sqrt(d1 / n)
    h = 0.01 * d0 / d1 if d1 > 1e-8 else 1e-6
    if h < 1e-8:
        h = 1e-8
    if h > hmax:
        h = hmax
    if h > ts[nt - 1]:
        h = ts[nt - 1]

    while iout < nt:
        t_goal = ts[iout]
        clipped = False
        if t + h >= t_goal:
            h = t_goal - t
            clipped = True
        if (not clipped) and h < 1e-14 * (1.0 if fabs(t) < 1.0 else fabs(t)):
            return Y_arr, STIFF, t

        # stage 2
        for i in range(n):
            yi[i] = y[i] + h * (_A21 * K[0, i])
        _rhs_c(yi, dim, adim, fe, fc, be, bc, cen, dxbuf, bbuf, K[1])
        for i in range(n):
            yi[i] = y[i] + h * (_A31 * K[0, i] + _A32 * K[1, i])
        _rhs_c(yi, dim, adim, fe, fc, be, bc, cen, dxbuf, bbuf, K[2])
        for i in range(n):
            yi[i] = y[i] + h * (_A41 * K[0, i] + _A42 * K[1, i] + _A43 * K[2, i])
        _rhs_c(yi, dim, adim, fe, fc, be, bc, cen, dxbuf, bbuf, K[3])
        for i in range(n):
            yi[i] = y[i] + h * (_A51 * K[0, i] + _A52 * K[1, i]
                                + _A53 * K[2, i] + _A54 * K[3, i])
        _rhs_c(yi, dim, adim, fe, fc, be, bc, cen, dxbuf, bbuf, K[4])
        for i in range(n):
            yi[i] = y[i] + h * (_A61 * K[0, i] + _A62 * K[1, i] + _A63 * K[2, i]
                                + _A64 * K[3, i] + _A65 * K[4, i])
        _rhs_c(yi, dim, adim, fe, fc, be, bc, cen, dxbuf, bbuf, K[5])
        for i in range(n):
            ynew[i] = y[i] + h * (_B1 * K[0, i] + _B3 * K[2, i] + _B4 * K[3, i]
                                  + _B5 * K[4, i] + _B6 * K[5, i])
        _rhs_c(ynew, dim, adim, fe, fc, be, bc, cen, dxbuf, bbuf, K[6])

        err = 0
        for i in range(n):
            errv[i] = h * (_E1 * K[0, i] + _E3 * K[2, i] + _E4 * K[3, i]
                           + _E5 * K[4, i] + _E6 * K[5, i] + _E7 * K[6, i])
            ay = abs(y[i])
            any_ = abs(ynew[i])
            sc = atol + rtol * (ay if ay > any_ else any_)
            err += (abs(errv[i]) / sc) ** 2
        err = sqrt(err / n)

        if err <= 1.0:
            t = t + h
            for i in range(n):
                y[i] = ynew[i]
                K[0, i] = K[6, i]
            vn = 0
            for i in range(n):
                ay = abs(y[i])
                if ay > _BLOWUP_GUARD or ay != ay:
                    return Y_arr, BLOWUP, t
            if norm_kind == 1:
                vn = 0
                for i in range(dim):
                    ay = abs(y[i])
                    if ay > vn:
                        vn = ay
            else:
                vn = 0
                for i in range(dim):
                    vn += abs(y[i]) ** 2
                vn = sqrt(vn)
            if vn > 1.0:
                return Y_arr, ESCAPED, t
            while iout < nt and t >= ts[iout] - 1e-14 * (1.0 if t < 1.0 else t):
                for i in range(n):
                    Y[iout, i] = y[i]
                iout += 1
        factor = 0.9 * err ** -0.2 if err > 1e-30 else 5.0
        if factor > 5.0:
            factor = 5.0
        if factor < 0.2:
            factor = 0.2
        h = h * factor
        if h > hmax:
            h = hmax
    return Y_arr, OK, t
