"""Semicocycle engine.

A semicocycle is either *generated* (given by its generator B, evolved
through the coupled problem u' = f(u), V' = B(u)V, V(0) = 1) or in *closed
form* as a gauge transform M(F_t(x))^{-1} Gamma_t(x) M(x) of an inner
semicocycle (a constant one e^{tB0}, or recursively another spec).
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels, integrate
from .algebra import mat_exp, op_norm, vec_norm
from .dynamics import SemigroupSpec, _norm_code, flow_at, linear_part
from .errors import (DomainEscape, NonInvertibleGauge, ScenarioError,
                     StiffnessError, ToolkitError)
from .mapexpr import (ExpPolyScalar, MapExpr, Polynomial, map_dderiv, map_eval,
                      poly_add, poly_dderiv_contract, poly_constant,
                      poly_identity, poly_inverse_series, poly_matmul,
                      poly_scale, poly_truncate)
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class SemicocycleSpec:
    algebra_dim: int
    variant: str                       # "generated" | "closed_form"
    b: Optional[MapExpr] = None        # generated: the generator B
    gauge: Optional[MapExpr] = None    # closed form: the gauge M
    inner: Union[np.ndarray, "SemicocycleSpec", None] = None
    b0: Optional[np.ndarray] = None    # generator value at x0, cached at load

    @staticmethod
    def generated(b: MapExpr, f: SemigroupSpec,
                  tols: Tolerances = DEFAULT) -> "SemicocycleSpec":
        b0 = np.asarray(map_eval(b, f.x0, tols), dtype=complex)
        adim = b0.shape[0]
        return SemicocycleSpec(adim, "generated", b=b, b0=b0)

    @staticmethod
    def closed_form(gauge: MapExpr, inner, f: SemigroupSpec,
                    tols: Tolerances = DEFAULT) -> "SemicocycleSpec":
        if isinstance(inner, SemicocycleSpec):
            adim = inner.algebra_dim
        else:
            inner = np.asarray(inner, dtype=complex)
            adim = inner.shape[0]
        spec = SemicocycleSpec(adim, "closed_form", gauge=gauge, inner=inner)
        b0 = generator_eval(spec, f, f.x0, tols)
        object.__setattr__(spec, "b0", b0)
        return spec


@dataclass(frozen=True)
class CocyclePath:
    x: np.ndarray
    times: np.ndarray
    gammas: np.ndarray        # (nt, adim, adim)
    flow_states: np.ndarray   # (nt, dim)


def _check_times(times) -> np.ndarray:
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if ts.size == 0:
        raise ValueError("times must be non-empty")
    if ts.size > 1 and np.any(np.diff(ts) <= 0):
        raise ValueError("times must be strictly increasing")
    if ts[0] < 0:
        raise ValueError("times must be non-negative")
    return ts


def _inner_gammas(spec: SemicocycleSpec, f: SemigroupSpec, x, times,
                  tols: Tolerances):
    if isinstance(spec.inner, SemicocycleSpec):
        return evolve(f, spec.inner, x, times, tols).gammas
    return np.stack([mat_exp(spec.inner, t, tols) for t in times])


def evolve_partial(f: SemigroupSpec, s: SemicocycleSpec, x, times,
                   tols: Tolerances = DEFAULT):
    """Like evolve but reports failures instead of raising.

    Returns (CocyclePath, status, t_stop); rows past t_stop hold NaN.
    """
    times = _check_times(times)
    x = np.asarray(x, dtype=complex).reshape(f.dim)
    adim = s.algebra_dim

    if s.variant == "closed_form":
        states = flow_at(f, x, times, tols)
        inner = _inner_gammas(s, f, x, times, tols)
        mx = np.asarray(map_eval(s.gauge, x, tols), dtype=complex)
        gammas = np.empty((len(times), adim, adim), dtype=complex)
        for i, t in enumerate(times):
            mft = np.asarray(map_eval(s.gauge, states[i], tols), dtype=complex)
            gammas[i] = np.linalg.solve(mft, inner[i] @ mx)
        return CocyclePath(x, times, gammas, states), _kernels.OK, float(times[-1])

    gen = s.b
    eff = tols.ode * integrate.TOL_SAFETY
    y0 = np.concatenate([x, np.eye(adim, dtype=complex).ravel()])
    if isinstance(gen, Polynomial) and isinstance(f.generator_f, Polynomial):
        fexps, fcoefs = f.generator_f.packed()
        bexps, bcoefs = gen.packed()
        Y, status, t_stop = _kernels.evolve_poly(
            fexps, fcoefs, bexps, bcoefs, f.generator_f.center, y0, times,
            eff, eff, _norm_code(f.norm), np.inf)
    else:
        def rhs(y):
            u = y[:f.dim]
            v = y[f.dim:].reshape(adim, adim)
            du = np.asarray(map_eval(f.generator_f, u, tols)).reshape(f.dim)
            dv = np.asarray(map_eval(gen, u, tols)) @ v
            return np.concatenate([du, dv.ravel()])
        Y, status, t_stop = integrate.integrate(
            rhs, y0, times, tols.ode, ball_dim=f.dim, norm_kind=f.norm,
            raise_on_escape=False)
    states = Y[:, :f.dim]
    gammas = Y[:, f.dim:].reshape(len(times), adim, adim)
    return CocyclePath(x, times, gammas, states), status, float(t_stop)


def evolve(f: SemigroupSpec, s: SemicocycleSpec, x, times,
           tols: Tolerances = DEFAULT) -> CocyclePath:
    """Gamma_t(x) along `times` (increasing, from 0 allowed)."""
    path, status, t_stop = evolve_partial(f, s, x, times, tols)
    if status == _kernels.ESCAPED:
        raise DomainEscape(t_stop, 1.0)
    if status in (_kernels.STIFF, _kernels.BLOWUP):
        raise StiffnessError(t_stop, 0.0)
    return path


def gamma_at(f: SemigroupSpec, s: SemicocycleSpec, x, t: float,
             tols: Tolerances = DEFAULT) -> np.ndarray:
    if t == 0.0:
        return np.eye(s.algebra_dim, dtype=complex)
    return evolve(f, s, x, [t], tols).gammas[0]


def generator_eval(s: SemicocycleSpec, f: SemigroupSpec, x,
                   tols: Tolerances = DEFAULT) -> np.ndarray:
    """B(x), exactly where possible.

    Generated specs evaluate B directly; closed forms use the generator
    identity B(x) = M(x)^{-1} (B_in(x) M(x) - M'(x)[f(x)]).
    """
    x = np.asarray(x, dtype=complex).reshape(f.dim)
    if s.variant == "generated":
        return np.asarray(map_eval(s.b, x, tols), dtype=complex)
    mx = np.asarray(map_eval(s.gauge, x, tols), dtype=complex)
    fx = np.asarray(map_eval(f.generator_f, x, tols)).reshape(f.dim)
    dm = np.asarray(map_dderiv(s.gauge, x, fx, tols), dtype=complex)
    if isinstance(s.inner, SemicocycleSpec):
        bin_x = generator_eval(s.inner, f, x, tols)
    else:
        bin_x = s.inner
    return np.linalg.solve(mx, bin_x @ mx - dm)


def generator_extract(s: SemicocycleSpec, f: SemigroupSpec, x,
                      h0: float | None = None,
                      tols: Tolerances = DEFAULT) -> np.ndarray:
    """d/dt Gamma_t(x)|_{t=0} by Richardson extrapolation of forward
    quotients; at x0 this is the defining value B0."""
    h0 = tols.tstep if h0 is None else h0
    times = np.array([h0 / 4, h0 / 2, h0])
    gam = evolve(f, s, x, times, tols).gammas
    eye = np.eye(s.algebra_dim, dtype=complex)
    d0 = (gam[2] - eye) / h0
    d1 = (gam[1] - eye) / (h0 / 2)
    d2 = (gam[0] - eye) / (h0 / 4)
    r0 = 2 * d1 - d0
    r1 = 2 * d2 - d1
    return (4 * r1 - r0) / 3


def chain_residual(f: SemigroupSpec, s: SemicocycleSpec, x, t: float, s_time: float,
                   tols: Tolerances = DEFAULT) -> float:
    """|| Gamma_{t+s}(x) - Gamma_t(F_s(x)) Gamma_s(x) || in the algebra norm."""
    if t < 0 or s_time < 0:
        raise ValueError("chain rule requires t, s >= 0")
    x = np.asarray(x, dtype=complex).reshape(f.dim)
    times = sorted({s_time, s_time + t} - {0.0})
    if not times:
        return 0.0
    path = evolve(f, s, x, times, tols)
    lookup = {ti: g for ti, g in zip(path.times, path.gammas)}
    eye = np.eye(s.algebra_dim, dtype=complex)
    g_s = lookup.get(s_time, eye)
    g_ts = lookup.get(s_time + t, eye)
    xs = flow_at(f, x, [s_time], tols)[0] if s_time > 0 else x
    g_t_shift = gamma_at(f, s, xs, t, tols) if t > 0 else eye
    return op_norm(g_ts - g_t_shift @ g_s, f.norm)


def gauge_grid_check(m: MapExpr, grid, tols: Tolerances = DEFAULT):
    """Reject gauges whose smallest singular value dips below inv_floor."""
    worst = np.inf
    for x in grid:
        val = np.atleast_2d(np.asarray(map_eval(m, x, tols), dtype=complex))
        smin = float(np.linalg.svd(val, compute_uv=False)[-1])
        worst = min(worst, smin)
        if smin < tols.inv_floor:
            raise NonInvertibleGauge(
                f"gauge min singular value {smin:.3g} below {tols.inv_floor:.3g}")
    return worst


def cohomologous(s: SemicocycleSpec, m: MapExpr, f: SemigroupSpec, grid=None,
                 tols: Tolerances = DEFAULT) -> SemicocycleSpec:
    """Gauge transform: the semicocycle M(F_t(x))^{-1} Gamma_t(x) M(x)."""
    if grid is None:
        from .sampling import sample_ball
        grid = sample_ball(f.dim, f.sample_radius, 25, 0, f.norm)
        grid = [f.x0 + g for g in grid]
    gauge_grid_check(m, grid, tols)
    return SemicocycleSpec.closed_form(m, s, f, tols)


def constant_semicocycle(b0: np.ndarray, f: SemigroupSpec,
                         tols: Tolerances = DEFAULT) -> SemicocycleSpec:
    """Gamma_t(x) = e^{tB0}."""
    b0 = np.asarray(b0, dtype=complex)
    adim = b0.shape[0]
    gauge = poly_identity(adim, f.dim, f.x0)
    return SemicocycleSpec.closed_form(gauge, b0, f, tols)


def derivative_cocycle(f: SemigroupSpec, x, times,
                       tols: Tolerances = DEFAULT) -> CocyclePath:
    """Frechet derivatives of the semigroup: V' = f'(F_t(x)) V, V(0) = I."""
    gen = f.generator_f
    if isinstance(gen, Polynomial):
        jac = _jacobian_polynomial(gen)
        s = SemicocycleSpec(f.dim, "generated", b=jac,
                            b0=linear_part(f, tols))
        return evolve(f, s, x, times, tols)
    times = _check_times(times)
    x = np.asarray(x, dtype=complex).reshape(f.dim)

    def rhs(y):
        u = y[:f.dim]
        v = y[f.dim:].reshape(f.dim, f.dim)
        du = np.asarray(map_eval(gen, u, tols)).reshape(f.dim)
        cols = [np.asarray(map_dderiv(gen, u, v[:, j], tols)).reshape(f.dim)
                for j in range(f.dim)]
        return np.concatenate([du, np.stack(cols, axis=1).ravel()])

    y0 = np.concatenate([x, np.eye(f.dim, dtype=complex).ravel()])
    Y, status, t_stop = integrate.integrate(rhs, y0, times, tols.ode,
                                            ball_dim=f.dim, norm_kind=f.norm,
                                            raise_on_escape=False)
    if status != _kernels.OK:
        raise StiffnessError(t_stop, 0.0)
    return CocyclePath(x, times, Y[:, f.dim:].reshape(len(times), f.dim, f.dim),
                       Y[:, :f.dim])


def _jacobian_polynomial(fpoly: Polynomial) -> Polynomial:
    d = fpoly.input_dim
    terms: dict[tuple, np.ndarray] = {}
    for alpha, g in fpoly.terms.items():
        for j, aj in enumerate(alpha):
            if aj == 0:
                continue
            red = tuple(a - (1 if i == j else 0) for i, a in enumerate(alpha))
            block = np.zeros((d, d), dtype=complex)
            block[:, j] = aj * g
            if red in terms:
                terms[red] = terms[red] + block
            else:
                terms[red] = block
    return Polynomial(d, (d, d), fpoly.center, terms)


def generator_series(s: SemicocycleSpec, f: SemigroupSpec, max_degree: int,
                     tols: Tolerances = DEFAULT) -> Polynomial:
    """Taylor coefficients of the generator B up to max_degree.

    Generated polynomial specs truncate directly; closed forms expand the
    generator identity M^{-1}(B_in M - M'[f]) as a power series, which needs
    a polynomial generator for the base semigroup.
    """
    if s.variant == "generated":
        if not isinstance(s.b, Polynomial):
            raise ToolkitError("generator series requires a polynomial generator B")
        return poly_truncate(s.b, max_degree)
    if not isinstance(f.generator_f, Polynomial):
        raise ToolkitError("generator series requires a polynomial semigroup generator")
    fpoly = poly_truncate(f.generator_f, max_degree + 1)
    adim = s.algebra_dim
    if isinstance(s.inner, SemicocycleSpec):
        b_in = generator_series(s.inner, f, max_degree, tols)
    else:
        b_in = poly_constant(np.asarray(s.inner, dtype=complex), f.dim, f.x0)
    gauge = s.gauge
    if isinstance(gauge, ExpPolyScalar):
        if adim != 1:
            raise ToolkitError("exp-poly gauges are scalar-algebra only")
        dp = poly_dderiv_contract(gauge.p, fpoly, max_degree)
        correction = poly_matmul(poly_scale(dp, -1.0),
                                 poly_identity(adim, f.dim, f.x0), max_degree)
        gauge = gauge.r
        extra = correction
    else:
        extra = None
    if not isinstance(gauge, Polynomial):
        raise ToolkitError("generator series requires a polynomial gauge")
    m_inv = poly_inverse_series(gauge, max_degree)
    dm = poly_dderiv_contract(gauge, fpoly, max_degree)
    core = poly_add(poly_matmul(b_in, gauge, max_degree), poly_scale(dm, -1.0))
    series = poly_truncate(poly_matmul(m_inv, core, max_degree), max_degree)
    if extra is not None:
        series = poly_add(series, extra)
    return series


def skew_extend(f: SemigroupSpec, s: SemicocycleSpec, tols: Tolerances = DEFAULT):
    """Extended flow (t, x, y) -> (F_t(x), Gamma_t(x) y)."""

    def step(t: float, x, y):
        x = np.asarray(x, dtype=complex).reshape(f.dim)
        y = np.asarray(y, dtype=complex).reshape(s.algebra_dim)
        if t == 0.0:
            return x, y
        path = evolve(f, s, x, [t], tols)
        return path.flow_states[0], path.gammas[0] @ y

    return step


def growth_fit(paths: list[CocyclePath], norm="spectral") -> tuple[float, float]:
    """Envelope constants (C, L) with ||Gamma_t(x)|| <= C e^{Lt}.

    Slope by least squares on the later half of the time range (transients
    out), C raised until every sample is covered.
    """
    ts, ys = [], []
    for p in paths:
        for t, g in zip(p.times, p.gammas):
            n = op_norm(g, norm)
            if n > 0 and np.isfinite(n):
                ts.append(float(t))
                ys.append(float(np.log(n)))
    ts = np.asarray(ts)
    ys = np.asarray(ys)
    if ts.size < 2:
        return 1.0, 0.0
    cut = 0.5 * ts.max()
    sel = ts >= cut
    if sel.sum() < 2:
        sel = np.ones_like(ts, dtype=bool)
    L = float(np.polyfit(ts[sel], ys[sel], 1)[0])
    C = float(np.exp(np.max(ys - L * ts)))
    return C, L
