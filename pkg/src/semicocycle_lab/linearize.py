"""Linearization engines for semicocycles over a contracting base flow.

A semicocycle Gamma is linearizable when a gauge M with M(x0) = 1 turns it
into the constant semicocycle e^{tB0}:

    M(F_t(x)) Gamma_t(x) = e^{tB0} M(x).

This module implements the constructive routes:

* naive_limit: M(x) = lim e^{-tB0} Gamma_t(x) along a geometric schedule,
  with Cauchy-window convergence detection and divergence classification;
* integral_criterion: quadrature of the conjugated generator deviation
  ||e^{-tB0} B(F_t(x)) e^{tB0} - B0||, whose finiteness forces the naive
  limit to exist;
* corrected_limit / corrector_fit: the same limit with a polynomial
  corrector N applied at the moving point, plus least-squares synthesis of
  N from Cauchy differences;
* taylor_linearize: degree-by-degree Sylvester solves for the gauge's
  Taylor coefficients when the base linear part is scalar (-omega * I);
* verify_cohomology / coboundary_check: a posteriori residual checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .algebra import mat_exp, op_norm, sylvester_solve
from .dynamics import SemigroupSpec, flow_at, linear_part
from .errors import (FitRejected, MatrixOverflow, NonInvertibleGauge,
                     ResonantSylvester, ToolkitError)
from .mapexpr import (MapExpr, Polynomial, map_eval, poly_add,
                      poly_dderiv_contract, poly_homogeneous, poly_identity,
                      poly_matmul, poly_truncate)
from .semicocycle import (SemicocycleSpec, evolve_partial, gauge_grid_check,
                          generator_eval, generator_series)
from .spectra import char_ratio, resonance, scalar_omega
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "Schedule", "ConvergenceVerdict", "Corrector", "LinearizationResult",
    "IntegralReport", "naive_limit", "corrected_limit", "corrector_fit",
    "integral_criterion", "taylor_linearize", "verify_cohomology",
    "coboundary_check", "cauchy_time",
]

# slope threshold separating "flat" tails (Oscillating) from drifting ones
_FLAT_SLOPE = 1e-3


@dataclass(frozen=True)
class Schedule:
    """Geometric evaluation times t_k = t0 * ratio**k, k = 0..steps."""
    t0: float = 1.0
    ratio: float = 1.5
    steps: int = 40

    def times(self) -> np.ndarray:
        return self.t0 * self.ratio ** np.arange(self.steps + 1, dtype=float)


@dataclass(frozen=True)
class ConvergenceVerdict:
    status: str                  # Converged, Diverged, Oscillating, Undecided
    t_reached: float
    cauchy_tail: float
    witness: float | None = None  # fitted growth exponent when Diverged


@dataclass(frozen=True)
class Corrector:
    n: Polynomial
    degree: int
    normalization_residual: float
    null_dim: int = 0            # > 0 flags a rank-deficient fit


@dataclass(frozen=True)
class LinearizationResult:
    method: str                  # naive, corrected, taylor
    b0: np.ndarray
    verdict: ConvergenceVerdict
    m_samples: dict = field(default_factory=dict)
    m_fit: MapExpr | None = None
    corrector: Corrector | None = None
    cohomology_residual: float | None = None
    integral_l: float | None = None


@dataclass(frozen=True)
class IntegralReport:
    kind: str                    # finite, divergent, undecided
    value: float | None          # L(x) when finite
    growth: float                # fitted exponent of the integrand tail
    tail: float                  # extrapolated remainder past T_max
    r_squared: float


def _slope(ts, ys):
    if len(ts) < 2:
        return 0.0
    return float(np.polyfit(ts, ys, 1)[0])


def _as_samples(x_samples, dim):
    out = []
    for x in x_samples:
        out.append(np.asarray(x, dtype=complex).reshape(dim))
    if not out:
        raise ToolkitError("need at least one sample point")
    return out


def _corrector_eval(n: MapExpr | None, state, adim, tols):
    if n is None:
        return None
    return np.asarray(map_eval(n, state, tols), dtype=complex).reshape(adim, adim)


class _LimitTracker:
    """Per-sample Cauchy bookkeeping for the limit schedules."""

    def __init__(self, tols: Tolerances):
        self.tols = tols
        self.ts: list[float] = []
        self.norms: list[float] = []
        self.diffs: list[float] = []
        self.prev = None
        self.value = None

    def push(self, t: float, v: np.ndarray):
        nv = op_norm(v)
        if not np.isfinite(nv) or nv > self.tols.div_cap:
            self.ts.append(t)
            self.norms.append(min(nv, 1e300) if np.isfinite(nv) else 1e300)
            return self._diverged(t)
        if self.prev is not None:
            self.diffs.append(op_norm(v - self.prev))
        self.ts.append(t)
        self.norms.append(nv)
        self.prev = v
        self.value = v
        if len(self.diffs) >= 3 and all(d <= self.tols.lim
                                        for d in self.diffs[-3:]):
            return ConvergenceVerdict("Converged", t, max(self.diffs[-3:]))
        return None

    def _diverged(self, t: float):
        w = _slope(self.ts[-6:], np.log(np.maximum(self.norms[-6:], 1e-300)))
        tail = self.diffs[-1] if self.diffs else math.inf
        return ConvergenceVerdict("Diverged", t, tail, witness=max(w, 0.0))

    def exhausted(self):
        t = self.ts[-1] if self.ts else 0.0
        if not self.diffs:
            return ConvergenceVerdict("Undecided", t, math.inf)
        half = max(len(self.diffs) // 2, 2)
        dts = self.ts[-half:]
        dys = np.log(np.maximum(self.diffs[-half:], 1e-300))
        s = _slope(dts, dys)
        tail = self.diffs[-1]
        if s > _FLAT_SLOPE:
            return ConvergenceVerdict("Diverged", t, tail, witness=s)
        if abs(s) <= _FLAT_SLOPE:
            return ConvergenceVerdict("Oscillating", t, tail)
        return ConvergenceVerdict("Undecided", t, tail)


def _sample_limit(f, s, n, x, times, tols) -> tuple[ConvergenceVerdict, np.ndarray | None]:
    """Run v(t) = e^{-tB0} N(F_t(x)) Gamma_t(x) along the schedule."""
    adim = s.algebra_dim
    b0 = s.b0
    tracker = _LimitTracker(tols)
    x = np.asarray(x, dtype=complex).reshape(f.dim)

    if s.variant == "closed_form":
        # direct evaluation at each schedule time, walked incrementally so
        # an early verdict skips the far tail of the schedule
        for t in times:
            try:
                path, status, _ = evolve_partial(f, s, x, [t], tols)
                e = mat_exp(b0, -t, tols=tols)
            except MatrixOverflow:
                return tracker.exhausted(), None
            g = path.gammas[0]
            nmat = _corrector_eval(n, path.flow_states[0], adim, tols)
            v = e @ g if nmat is None else e @ nmat @ g
            verdict = tracker.push(float(t), v)
            if verdict is not None:
                return verdict, tracker.value
        return tracker.exhausted(), tracker.value

    # generated variant: chain Gamma across schedule segments via the
    # semicocycle law Gamma_{t+dt}(x) = Gamma_dt(F_t(x)) Gamma_t(x)
    cur_x = x
    cur_g = np.eye(adim, dtype=complex)
    t_prev = 0.0
    for t in times:
        dt = float(t) - t_prev
        path, status, _ = evolve_partial(f, s, cur_x, [dt], tols)
        if status != _kernels.OK:
            return tracker._diverged(float(t)), None
        cur_g = path.gammas[0] @ cur_g
        cur_x = path.flow_states[0]
        t_prev = float(t)
        try:
            e = mat_exp(b0, -t, tols=tols)
        except MatrixOverflow:
            return tracker.exhausted(), None
        nmat = _corrector_eval(n, cur_x, adim, tols)
        v = e @ cur_g if nmat is None else e @ nmat @ cur_g
        verdict = tracker.push(float(t), v)
        if verdict is not None:
            return verdict, tracker.value
    return tracker.exhausted(), tracker.value


_STATUS_RANK = {"Converged": 0, "Undecided": 1, "Oscillating": 2, "Diverged": 3}


def _limit_engine(f, s, n, x_samples, schedule, tols, method) -> LinearizationResult:
    times = schedule.times()
    samples = _as_samples(x_samples, f.dim)
    m_samples = {}
    worst = ConvergenceVerdict("Converged", 0.0, 0.0)
    for x in samples:
        verdict, value = _sample_limit(f, s, n, x, times, tols)
        if verdict.status == "Converged" and value is not None:
            m_samples[tuple(map(complex, x))] = value
        if (_STATUS_RANK[verdict.status] > _STATUS_RANK[worst.status]
                or (verdict.status == worst.status
                    and verdict.cauchy_tail > worst.cauchy_tail)):
            worst = verdict
        if verdict.status == "Converged" and worst.status == "Converged":
            worst = ConvergenceVerdict(
                "Converged", max(worst.t_reached, verdict.t_reached),
                max(worst.cauchy_tail, verdict.cauchy_tail))
    if worst.status != "Converged":
        m_samples = {}
    corr = None
    if n is not None:
        corr = Corrector(n, n.degree,
                         float(op_norm(np.asarray(map_eval(n, f.x0, tols))
                                       - np.eye(s.algebra_dim))))
    return LinearizationResult(method, s.b0, worst, m_samples, corrector=corr)


def naive_limit(f: SemigroupSpec, s: SemicocycleSpec, x_samples,
                schedule: Schedule = Schedule(),
                tols: Tolerances = DEFAULT) -> LinearizationResult:
    """Limit gauge M(x) = lim_t e^{-tB0} Gamma_t(x) on a geometric schedule."""
    return _limit_engine(f, s, None, x_samples, schedule, tols, "naive")


def corrected_limit(f: SemigroupSpec, s: SemicocycleSpec, n: MapExpr,
                    x_samples, schedule: Schedule = Schedule(),
                    tols: Tolerances = DEFAULT) -> LinearizationResult:
    """Limit gauge with corrector: M(x) = lim_t e^{-tB0} N(F_t(x)) Gamma_t(x)."""
    n0 = np.asarray(map_eval(n, f.x0, tols))
    if op_norm(n0 - np.eye(s.algebra_dim)) > tols.norm:
        raise ToolkitError("corrector is not normalized at the fixed point")
    return _limit_engine(f, s, n, x_samples, schedule, tols, "corrected")


def integral_criterion(f: SemigroupSpec, s: SemicocycleSpec, x,
                       t_max: float = 40.0, n_points: int = 1025,
                       tols: Tolerances = DEFAULT) -> IntegralReport:
    """Quadrature of g(t) = ||e^{-tB0} B(F_t(x)) e^{tB0} - B0|| on [0, t_max].

    Finiteness of the integral out to infinity forces the naive limit to
    exist; the tail past t_max is extrapolated from a log-linear fit of the
    final window of the integrand.
    """
    if n_points % 2 == 0:
        n_points += 1
    x = np.asarray(x, dtype=complex).reshape(f.dim)
    b0 = s.b0
    ts = np.linspace(0.0, t_max, n_points)
    states = flow_at(f, x, ts[1:], tols)
    g = np.empty(n_points)
    for i, t in enumerate(ts):
        state = x if i == 0 else states[i - 1]
        b = generator_eval(s, f, state, tols)
        em = mat_exp(b0, -t, tols=tols)
        ep = mat_exp(b0, t, tols=tols)
        g[i] = op_norm(em @ b @ ep - b0)

    h = ts[1] - ts[0]
    integral = float(h / 3.0 * (g[0] + g[-1]
                                + 4.0 * g[1:-1:2].sum() + 2.0 * g[2:-1:2].sum()))

    tiny = tols.tail * 1e-3
    if np.max(g) <= tiny:
        # integrand numerically zero (constant semicocycle): L = integral
        return IntegralReport("finite", integral, -math.inf, 0.0, 1.0)

    # log-linear fit over the final window where g is still resolvable
    lo = int(0.75 * n_points)
    win_t, win_y = [], []
    for i in range(lo, n_points):
        if g[i] > 1e-280:
            win_t.append(ts[i])
            win_y.append(math.log(g[i]))
    if len(win_t) < 8:
        # integrand underflowed inside the window: decayed to nothing
        return IntegralReport("finite", integral, -math.inf, 0.0, 1.0)
    coef = np.polyfit(win_t, win_y, 1)
    fit = np.polyval(coef, win_t)
    ss_res = float(np.sum((np.asarray(win_y) - fit) ** 2))
    ss_tot = float(np.sum((np.asarray(win_y) - np.mean(win_y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    slope = float(coef[0])
    if r2 < 0.9:
        return IntegralReport("undecided", None, slope, math.inf, r2)
    if slope >= 0.0:
        return IntegralReport("divergent", None, slope, math.inf, r2)
    tail = g[-1] / abs(slope)
    if tail > tols.tail:
        return IntegralReport("undecided", None, slope, tail, r2)
    return IntegralReport("finite", integral + tail, slope, tail, r2)


def _fit_times(b0, tols) -> np.ndarray:
    # short geometric ladder; late times would let e^{-tB0} (...) e^{t kappa}
    # factors dwarf the conditioning of the least-squares system
    return 1.0 * 1.5 ** np.arange(7, dtype=float)


def corrector_fit(f: SemigroupSpec, s: SemicocycleSpec, degree: int,
                  x_samples, t_pairs=None, ridge: float | None = None,
                  audit: bool = True,
                  tols: Tolerances = DEFAULT) -> Corrector:
    """Synthesize a polynomial corrector N of the given degree.

    The coefficients of N (with N(x0) = 1 pinned) enter the Cauchy
    differences v(t2) - v(t1) linearly, so they are recovered by ridge
    least squares over samples and consecutive time pairs. The fit is
    audited by corrected_limit and rejected if it does not converge.
    """
    if degree < 0:
        raise ToolkitError("corrector degree must be nonnegative")
    if ridge is None:
        ridge = tols.ridge
    adim = s.algebra_dim
    b0 = s.b0
    samples = _as_samples(x_samples, f.dim)
    times = _fit_times(b0, tols) if t_pairs is None else None

    # multi-index basis of degrees 1..degree (degree 0 is pinned to I)
    alphas = _multi_indices(f.dim, degree)
    n_unknown = len(alphas) * adim * adim
    ident = poly_identity(adim, f.dim, f.x0)
    if n_unknown == 0:
        corr = Corrector(ident, 0, 0.0)
        if audit:
            res = corrected_limit(f, s, ident, samples, tols=tols)
            if res.verdict.status != "Converged":
                raise FitRejected(
                    f"degree-0 corrector audit: {res.verdict.status} "
                    f"at t={res.verdict.t_reached:g}")
        return corr

    rows_a, rows_b = [], []
    for x in samples:
        if t_pairs is None:
            path, status, _ = evolve_partial(f, s, x, times, tols)
            if status != _kernels.OK:
                raise FitRejected("sample evolution failed during the fit")
            pairs = [((times[i], path.flow_states[i], path.gammas[i]),
                      (times[i + 1], path.flow_states[i + 1], path.gammas[i + 1]))
                     for i in range(len(times) - 1)]
        else:
            pairs = []
            for t1, t2 in t_pairs:
                p, status, _ = evolve_partial(f, s, x, [t1, t2], tols)
                if status != _kernels.OK:
                    raise FitRejected("sample evolution failed during the fit")
                pairs.append(((t1, p.flow_states[0], p.gammas[0]),
                              (t2, p.flow_states[1], p.gammas[1])))
        for (t1, u1, g1), (t2, u2, g2) in pairs:
            e1 = mat_exp(b0, -t1, tols=tols)
            e2 = mat_exp(b0, -t2, tols=tols)
            base = (e2 @ g2 - e1 @ g1).ravel()
            # row-major vec(E N(u) G) = sum over alpha of
            # (u - x0)^alpha (E kron G^T) vec(C_alpha)
            k1 = np.kron(e1, g1.T)
            k2 = np.kron(e2, g2.T)
            d1 = u1 - f.x0
            d2 = u2 - f.x0
            row = np.empty((adim * adim, n_unknown), dtype=complex)
            for j, alpha in enumerate(alphas):
                w1 = np.prod(d1 ** np.array(alpha))
                w2 = np.prod(d2 ** np.array(alpha))
                row[:, j * adim * adim:(j + 1) * adim * adim] = w2 * k2 - w1 * k1
            rows_a.append(row)
            rows_b.append(base)

    a = np.vstack(rows_a)
    b = np.concatenate(rows_b)
    sv = np.linalg.svd(a, compute_uv=False)
    null_dim = int(np.sum(sv <= tols.rank * max(sv[0], 1e-300)))
    # ridge solve: min ||A c + b||^2 + ridge * ||c||^2
    aug_a = np.vstack([a, math.sqrt(ridge) * np.eye(n_unknown, dtype=complex)])
    aug_b = np.concatenate([-b, np.zeros(n_unknown, dtype=complex)])
    c, *_ = np.linalg.lstsq(aug_a, aug_b, rcond=None)

    terms = {(0,) * f.dim: np.eye(adim, dtype=complex)}
    for j, alpha in enumerate(alphas):
        coef = c[j * adim * adim:(j + 1) * adim * adim].reshape(adim, adim)
        terms[alpha] = coef
    n_poly = Polynomial(f.dim, (adim, adim), f.x0, terms)
    corr = Corrector(n_poly, degree, 0.0, null_dim)

    if audit:
        res = corrected_limit(f, s, n_poly, samples, tols=tols)
        if res.verdict.status != "Converged":
            raise FitRejected(
                f"fitted corrector audit: {res.verdict.status} "
                f"at t={res.verdict.t_reached:g}")
    return corr


def _multi_indices(dim: int, degree: int):
    """All multi-indices of total degree 1..degree, lexicographic order."""
    out = []

    def rec(prefix, remaining, total):
        if remaining == 1:
            out.append(prefix + (total,))
            return
        for k in range(total + 1):
            rec(prefix + (k,), remaining - 1, total - k)

    for d in range(1, degree + 1):
        rec((), dim, d)
    return out


def taylor_linearize(f: SemigroupSpec, s: SemicocycleSpec, max_degree: int,
                     samples=None, t_grid=None,
                     tols: Tolerances = DEFAULT) -> LinearizationResult:
    """Gauge Taylor coefficients via degree-by-degree Sylvester solves.

    The gauge identity M'(x)[f(x)] = B0 M(x) - M(x) B(x), expanded in
    homogeneous degrees with f'(x0) = -omega * I, gives at degree k per
    multi-index alpha:

        (B0 + k omega I) M_alpha - M_alpha B0 = R_alpha,

    uniquely solvable exactly when k*omega avoids sigma(B0) - sigma(B0).
    """
    a = linear_part(f, tols)
    omega = scalar_omega(a, tols=tols)
    adim = s.algebra_dim
    b0 = s.b0

    bser = generator_series(s, f, max_degree, tols)
    b_hot = poly_add(bser, Polynomial(f.dim, (adim, adim), f.x0,
                                      {(0,) * f.dim: -b0}))
    fpoly = f.generator_f
    if not isinstance(fpoly, Polynomial):
        raise ToolkitError("taylor_linearize needs a polynomial base generator")
    # nonlinear part of f; the linear part acts through the Euler identity
    f_nl = Polynomial(f.dim, fpoly.output_shape, f.x0,
                      {al: co for al, co in fpoly.terms.items()
                       if sum(al) >= 2})

    m_cur = poly_identity(adim, f.dim, f.x0)
    eye = np.eye(adim, dtype=complex)
    for k in range(1, max_degree + 1):
        rhs = poly_add(poly_dderiv_contract(m_cur, f_nl, k),
                       poly_matmul(m_cur, b_hot, k))
        rhs_k = poly_homogeneous(rhs, k)
        new_terms = {}
        for alpha, r in rhs_k.terms.items():
            try:
                new_terms[alpha] = sylvester_solve(
                    b0 + k * omega * eye, b0, r, tols=tols)
            except ResonantSylvester as exc:
                raise ResonantSylvester(exc.lam_p, exc.lam_q, degree=k) from exc
        if new_terms:
            m_cur = poly_add(m_cur, Polynomial(f.dim, (adim, adim), f.x0,
                                               new_terms))

    m_fit = poly_truncate(m_cur, max_degree)
    if samples is None:
        samples = _default_ball_grid(f)
    residual = verify_cohomology(f, s, m_fit, b0, samples, t_grid, tols)
    m_samples = {tuple(map(complex, np.asarray(x, dtype=complex).reshape(f.dim))):
                 np.asarray(map_eval(m_fit, x, tols)) for x in samples}
    verdict = ConvergenceVerdict("Converged", 0.0, 0.0)
    return LinearizationResult("taylor", b0, verdict, m_samples, m_fit=m_fit,
                               cohomology_residual=residual)


def _default_ball_grid(f: SemigroupSpec, count: int = 25, seed: int = 0):
    from .sampling import sample_ball
    pts = sample_ball(f.dim, f.sample_radius, count, seed, f.norm)
    return [f.x0 + p for p in pts]


def _default_t_grid():
    return np.linspace(0.25, 4.0, 16)


def verify_cohomology(f: SemigroupSpec, s: SemicocycleSpec, m: MapExpr,
                      b0: np.ndarray, samples, t_grid=None,
                      tols: Tolerances = DEFAULT) -> float:
    """Sup residual of M(F_t(x)) Gamma_t(x) = e^{tB0} M(x) over a grid.

    Normalized by 1 + ||e^{tB0}|| so exponentially large right-hand sides
    do not mask relative accuracy.
    """
    if t_grid is None:
        t_grid = _default_t_grid()
    t_grid = np.asarray(t_grid, dtype=float)
    samples = _as_samples(samples, f.dim)
    gauge_grid_check(m, samples, tols)
    b0 = np.asarray(b0, dtype=complex)
    worst = 0.0
    for x in samples:
        path, status, _ = evolve_partial(f, s, x, t_grid, tols)
        if status != _kernels.OK:
            raise ToolkitError("semicocycle evolution failed during verification")
        mx = np.asarray(map_eval(m, x, tols), dtype=complex)
        for i, t in enumerate(t_grid):
            mft = np.asarray(map_eval(m, path.flow_states[i], tols),
                             dtype=complex)
            e = mat_exp(b0, float(t), tols=tols)
            r = op_norm(mft @ path.gammas[i] - e @ mx) / (1.0 + op_norm(e))
            worst = max(worst, r)
    return worst


def coboundary_check(f: SemigroupSpec, s: SemicocycleSpec, x_samples=None,
                     schedule: Schedule = Schedule(),
                     tols: Tolerances = DEFAULT) -> bool:
    """True iff B0 vanishes and the naive limit converges.

    In that case e^{tB0} = 1 and the gauge satisfies
    Gamma_t(x) = M(F_t(x))^{-1} M(x).
    """
    if op_norm(s.b0) > tols.norm:
        return False
    if x_samples is None:
        x_samples = _default_ball_grid(f)
    res = naive_limit(f, s, x_samples, schedule, tols)
    return res.verdict.status == "Converged"


def cauchy_time(f: SemigroupSpec, s: SemicocycleSpec, x,
                tail_tol: float = 1e-6, dt: float = 0.25,
                t_max: float = 200.0,
                tols: Tolerances = DEFAULT) -> float | None:
    """First time the naive limit's Cauchy increment drops below tail_tol.

    Walks v(t) = e^{-tB0} Gamma_t(x) on a uniform grid; used to measure how
    the convergence time degrades as truncation dimension grows.
    """
    x = np.asarray(x, dtype=complex).reshape(f.dim)
    b0 = s.b0
    times = np.arange(dt, t_max + dt / 2, dt)
    path, status, t_stop = evolve_partial(f, s, x, times, tols)
    prev = np.eye(s.algebra_dim, dtype=complex)
    for i, t in enumerate(times):
        if t > t_stop:
            break
        v = mat_exp(b0, -float(t), tols=tols) @ path.gammas[i]
        if op_norm(v - prev) < tail_tol:
            return float(t)
        prev = v
    return None
