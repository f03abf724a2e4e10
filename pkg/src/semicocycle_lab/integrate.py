"""Generic adaptive Dormand-Prince 5(4) driver for callback right-hand
sides.

Used when a generator is not a plain polynomial (rational or exp-poly
variants); polynomial systems go through the packed kernels instead.
The controller matches `_kernels._poly_py` step for step.
"""

import numpy as np

from . import _kernels
from .errors import DomainEscape, StiffnessError

_A = _kernels._poly_py._A
_E = _kernels._poly_py._E

# local error is controlled a factor below the advertised tolerance so that
# accumulated global error stays within the module contracts
TOL_SAFETY = 1e-2


def integrate(rhs, y0, t_out, tol, ball_dim=0, norm_kind="spectral",
              raise_on_escape=True):
    """Integrate y' = rhs(y) from t = 0 through the increasing times t_out.

    When ball_dim > 0, the first ball_dim components are required to stay in
    the closed unit ball of the chosen norm.  Returns (Y, status, t_stop)
    with the same status codes as the kernels.
    """
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=complex)
    n = y.size
    Y = np.full((len(t_out), n), np.nan, dtype=complex)
    rtol = atol = tol * TOL_SAFETY
    nk = 1 if norm_kind == "sup" else 0

    t = 0.0
    iout = 0
    while iout < len(t_out) and t_out[iout] <= 1e-300:
        Y[iout] = y
        iout += 1
    if iout >= len(t_out):
        return Y, _kernels.OK, t

    k1 = rhs(y)
    sc = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / sc) ** 2))
    d1 = np.sqrt(np.mean(np.abs(k1 / sc) ** 2))
    h = 0.01 * d0 / d1 if d1 > 1e-8 else 1e-6
    h = min(max(h, 1e-8), t_out[-1])

    ks = [None] * 7
    while iout < len(t_out):
        t_goal = t_out[iout]
        clipped = False
        if t + h >= t_goal:
            h = t_goal - t
            clipped = True
        if not clipped and h < 1e-14 * max(1.0, abs(t)):
            if raise_on_escape:
                raise StiffnessError(t, h)
            return Y, _kernels.STIFF, t

        ks[0] = k1
        for i in range(1, 7):
            yi = y + h * sum(a * ks[j] for j, a in enumerate(_A[i - 1]))
            ks[i] = rhs(yi)
        ynew = y + h * sum(a * ks[j] for j, a in enumerate(_A[5]))
        err_vec = h * sum(e * ks[j] for j, e in enumerate(_E))
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = np.sqrt(np.mean(np.abs(err_vec / sc) ** 2))

        if err <= 1.0:
            t = t + h
            y = ynew
            k1 = ks[6]
            if ball_dim:
                bn = _kernels._poly_py._vec_norm(y[:ball_dim], nk)
                if bn > 1.0:
                    if raise_on_escape:
                        raise DomainEscape(t, bn)
                    return Y, _kernels.ESCAPED, t
            while iout < len(t_out) and t >= t_out[iout] - 1e-14 * max(1.0, t):
                Y[iout] = y
                iout += 1
        factor = 0.9 * err ** -0.2 if err > 1e-30 else 5.0
        h = h * min(5.0, max(0.2, factor))
    return Y, _kernels.OK, t
