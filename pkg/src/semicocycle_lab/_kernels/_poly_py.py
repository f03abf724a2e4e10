"""Pure-numpy implementation of the hot kernels.

Mirrors `_poly_cy` exactly (same algorithm, same summation order) so that
results stay interchangeable with the compiled extension.

Polynomials are packed as (exps, coeffs) with exps an (nterms, dim_in) int64
array of multi-indices and coeffs an (nterms, nout) complex array of
flattened coefficients, all centered at the owning map's base point.
"""

import numpy as np

IMPL = "python"

# Dormand-Prince 5(4) tableau (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])

OK = 0
ESCAPED = 1
STIFF = 2
BLOWUP = 3

_BLOWUP_GUARD = 1e250


def poly_eval(exps, coeffs, dx):
    """Evaluate sum_t coeffs[t] * dx**exps[t]; returns a flat (nout,) array."""
    mon = np.prod(np.power(dx[None, :], exps), axis=1)
    return mon @ coeffs


def poly_dderiv(exps, coeffs, dx, h):
    """Exact directional derivative of the packed polynomial along h."""
    out = np.zeros(coeffs.shape[1], dtype=complex)
    dim = exps.shape[1]
    for m in range(dim):
        em = exps[:, m]
        mask = em > 0
        if not mask.any():
            continue
        red = exps[mask].copy()
        red[:, m] -= 1
        mon = np.prod(np.power(dx[None, :], red), axis=1)
        out += ((em[mask] * mon) @ coeffs[mask]) * h[m]
    return out


def _vec_norm(u, norm_kind):
    if norm_kind == 1:  # sup
        return float(np.max(np.abs(u))) if u.size else 0.0
    return float(np.linalg.norm(u))


def _rhs(y, dim, adim, fexps, fcoefs, bexps, bcoefs, center):
    dy = np.empty_like(y)
    u = y[:dim]
    dx = u - center
    dy[:dim] = poly_eval(fexps, fcoefs, dx)
    if adim > 0:
        bval = poly_eval(bexps, bcoefs, dx).reshape(adim, adim)
        v = y[dim:].reshape(adim, adim)
        dy[dim:] = (bval @ v).ravel()
    return dy


def evolve_poly(fexps, fcoefs, bexps, bcoefs, center, y0, t_out,
                rtol, atol, norm_kind, hmax):
    """Adaptive DP5(4) integration of u' = f(u) [, V' = B(u) V].

    y0 holds u (dim entries) followed by vec(V) when bexps is not None.
    Returns (Y, status, t_stop): Y has one row per requested output time
    (rows past a failure are left as NaN).
    """
    dim = fcoefs.shape[1]
    adim = 0 if bexps is None else int(round((len(y0) - dim) ** 0.5))
    t_out = np.asarray(t_out, dtype=float)
    n = len(y0)
    Y = np.full((len(t_out), n), np.nan, dtype=complex)

    t = 0.0
    y = np.array(y0, dtype=complex)
    iout = 0
    while iout < len(t_out) and t_out[iout] <= 1e-300:
        Y[iout] = y
        iout += 1
    if iout >= len(t_out):
        return Y, OK, t

    k1 = _rhs(y, dim, adim, fexps, fcoefs, bexps, bcoefs, center)

    # initial step heuristic
    sc = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / sc) ** 2))
    d1 = np.sqrt(np.mean(np.abs(k1 / sc) ** 2))
    h = 0.01 * d0 / d1 if d1 > 1e-8 else 1e-6
    h = min(max(h, 1e-8), hmax, t_out[-1])

    ks = [None] * 7
    while iout < len(t_out):
        t_goal = t_out[iout]
        clipped = False
        if t + h >= t_goal:
            h = t_goal - t
            clipped = True
        if h < 1e-14 * max(1.0, abs(t)) and not clipped:
            return Y, STIFF, t

        ks[0] = k1
        for i in range(1, 7):
            yi = y + h * sum(a * ks[j] for j, a in enumerate(_A[i - 1]))
            ks[i] = _rhs(yi, dim, adim, fexps, fcoefs, bexps, bcoefs, center)
        ynew = y + h * sum(a * ks[j] for j, a in enumerate(_A[5]))
        # ks[6] is the FSAL stage f(t+h, ynew); _A[5] row equals the b weights
        err_vec = h * sum(e * ks[j] for j, e in enumerate(_E))
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = np.sqrt(np.mean(np.abs(err_vec / sc) ** 2))

        if err <= 1.0:
            t = t + h
            y = ynew
            k1 = ks[6]
            if not np.all(np.isfinite(y.view(float))) or np.max(np.abs(y)) > _BLOWUP_GUARD:
                return Y, BLOWUP, t
            if _vec_norm(y[:dim], norm_kind) > 1.0:
                return Y, ESCAPED, t
            while iout < len(t_out) and t >= t_out[iout] - 1e-14 * max(1.0, t):
                Y[iout] = y
                iout += 1
        factor = 0.9 * err ** -0.2 if err > 1e-30 else 5.0
        h = h * min(5.0, max(0.2, factor))
        h = min(h, hmax)
    return Y, OK, t
