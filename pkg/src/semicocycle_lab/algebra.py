"""Complex linear-algebra kernel: operator norms, spectra, matrix
exponentials and dense Sylvester solves on desk-scale matrices.

The algebra is realized as dim x dim complex matrices; the unit is the
identity and both provided operator norms satisfy ||1|| = 1.
"""

from typing import Literal

import numpy as np
import scipy.linalg

from .errors import MatrixOverflow, ResonantSylvester, SpectrumError, ToolkitError
from .tolerances import DEFAULT, Tolerances

NormKind = Literal["spectral", "sup"]

MAX_SPECTRUM_DIM = 32


def vec_norm(x: np.ndarray, kind: NormKind = "spectral") -> float:
    """Vector norm inducing the chosen operator norm (l2 or sup)."""
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    if kind == "sup":
        return float(np.max(np.abs(x)))
    return float(np.linalg.norm(x.ravel()))


def op_norm(a: np.ndarray, kind: NormKind = "spectral") -> float:
    """Operator norm: largest singular value, or max row sum for sup."""
    a = np.asarray(a, dtype=complex)
    if kind == "sup":
        return float(np.max(np.sum(np.abs(a), axis=1)))
    return float(np.linalg.norm(a, 2))


def mat_exp(a: np.ndarray, t: float = 1.0, tols: Tolerances = DEFAULT) -> np.ndarray:
    """exp(t*a) by scaling and squaring (Pade); exact identity at t = 0."""
    a = np.asarray(a, dtype=complex)
    if t == 0.0:
        return np.eye(a.shape[0], dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out = scipy.linalg.expm(t * a)
    if not np.all(np.isfinite(out.view(float))):
        raise MatrixOverflow(op_norm(t * a))
    return out


def spectrum(a: np.ndarray, tols: Tolerances = DEFAULT) -> np.ndarray:
    """Eigenvalues with multiplicity; triangular input resolved exactly."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n > MAX_SPECTRUM_DIM:
        raise SpectrumError(f"dimension {n} exceeds cap {MAX_SPECTRUM_DIM}")
    if n == 0:
        return np.array([], dtype=complex)
    strict_lower = a[np.tril_indices(n, -1)]
    strict_upper = a[np.triu_indices(n, 1)]
    if not strict_lower.any() or not strict_upper.any():
        return np.diag(a).copy()
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SpectrumError(str(exc)) from exc


def sylvester_solve(p: np.ndarray, q: np.ndarray, r: np.ndarray,
                    tols: Tolerances = DEFAULT) -> np.ndarray:
    """Solve P X - X Q = R for square P, Q with disjoint spectra."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    r = np.asarray(r, dtype=complex)
    lam_p = spectrum(p, tols)
    lam_q = spectrum(q, tols)
    scale = op_norm(p) + op_norm(q)
    gaps = np.abs(lam_p[:, None] - lam_q[None, :])
    i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
    if gaps[i, j] <= tols.spec * max(scale, 1.0):
        raise ResonantSylvester(complex(lam_p[i]), complex(lam_q[j]))
    x = scipy.linalg.solve_sylvester(p, -q, r)
    resid = op_norm(p @ x - x @ q - r)
    bound = tols.syl * max(scale * op_norm(x), 1e-300)
    if resid > bound:
        raise ToolkitError(
            f"sylvester residual {resid:.3g} above bound {bound:.3g}")
    return x
