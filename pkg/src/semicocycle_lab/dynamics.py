"""Semigroup engine: flow integration, linear part, attractivity checks.

The domain is the open unit ball of the chosen norm; the semigroup is the
flow of its holomorphic generator, which must vanish at the fixed point x0.
"""

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels, integrate
from .algebra import NormKind, spectrum, vec_norm
from .errors import DomainEscape, ScenarioError, StiffnessError
from .mapexpr import MapExpr, Polynomial, map_dderiv, map_eval
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class SemigroupSpec:
    dim: int
    norm: NormKind
    generator_f: MapExpr
    x0: np.ndarray
    sample_radius: float

    def __post_init__(self):
        object.__setattr__(self, "x0",
                           np.asarray(self.x0, dtype=complex).reshape(self.dim))
        if not 0 < self.sample_radius < 1:
            raise ScenarioError(f"sample_radius {self.sample_radius} not in (0,1)")

    def validate(self, tols: Tolerances = DEFAULT):
        fx0 = map_eval(self.generator_f, self.x0, tols)
        r = vec_norm(np.asarray(fx0).reshape(self.dim), self.norm)
        if r > tols.fp:
            raise ScenarioError(
                f"x0 is not a null point of the generator: ||f(x0)|| = {r:.3g}")
        if vec_norm(self.x0, self.norm) >= 1.0:
            raise ScenarioError("x0 lies outside the open unit ball")


@dataclass(frozen=True)
class FlowSample:
    t: float
    x: np.ndarray


def _norm_code(norm: NormKind) -> int:
    return 1 if norm == "sup" else 0


def flow_at(spec: SemigroupSpec, x: np.ndarray, times,
            tols: Tolerances = DEFAULT) -> np.ndarray:
    """F_t(x) for every t in the increasing sequence `times`.

    Adaptive embedded integration of u' = f(u); requested times are hit by
    step clipping.  Raises DomainEscape / StiffnessError.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    x = np.asarray(x, dtype=complex).reshape(spec.dim)
    f = spec.generator_f
    eff = tols.ode * integrate.TOL_SAFETY
    if isinstance(f, Polynomial):
        exps, coeffs = f.packed()
        Y, status, t_stop = _kernels.evolve_poly(
            exps, coeffs, None, None, f.center, x, times,
            eff, eff, _norm_code(spec.norm), np.inf)
        if status == _kernels.ESCAPED:
            raise DomainEscape(t_stop, 1.0)
        if status in (_kernels.STIFF, _kernels.BLOWUP):
            raise StiffnessError(t_stop, 0.0)
        return Y
    rhs = lambda u: np.asarray(map_eval(f, u, tols)).reshape(spec.dim)
    Y, _, _ = integrate.integrate(rhs, x, times, tols.ode,
                                  ball_dim=spec.dim, norm_kind=spec.norm)
    return Y


def flow(spec: SemigroupSpec, x: np.ndarray, t: float,
         tols: Tolerances = DEFAULT) -> np.ndarray:
    """F_t(x) for a single time t >= 0."""
    if t < 0:
        raise ValueError("flow requires t >= 0")
    if t == 0:
        return np.asarray(x, dtype=complex).reshape(spec.dim)
    return flow_at(spec, x, [t], tols)[0]


def linear_part(spec: SemigroupSpec, tols: Tolerances = DEFAULT) -> np.ndarray:
    """A = f'(x0): exact from polynomial coefficients when available."""
    f = spec.generator_f
    d = spec.dim
    if isinstance(f, Polynomial):
        a = np.zeros((d, d), dtype=complex)
        for j in range(d):
            alpha = tuple(1 if i == j else 0 for i in range(d))
            if alpha in f.terms:
                a[:, j] = f.terms[alpha]
        return a
    cols = []
    for j in range(d):
        e = np.zeros(d, dtype=complex)
        e[j] = 1.0
        cols.append(np.asarray(map_dderiv(f, spec.x0, e, tols)).reshape(d))
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class StarVerdict:
    verdict: str          # "holds" | "fails" | "inconclusive"
    kappa_plus: float
    max_terminal_dist: float | None = None

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def condition_star(spec: SemigroupSpec, grid: Iterable[np.ndarray], t_max: float,
                   tols: Tolerances = DEFAULT) -> StarVerdict:
    """Attractivity check: spectral margin plus terminal flow distance."""
    a = linear_part(spec, tols)
    kp = float(np.max(spectrum(a, tols).real))
    if kp >= tols.star_margin:
        return StarVerdict("fails", kp)
    if kp > -tols.star_margin:
        return StarVerdict("inconclusive", kp)
    worst = 0.0
    for x in grid:
        xt = flow(spec, x, t_max, tols)
        worst = max(worst, vec_norm(xt - spec.x0, spec.norm))
    verdict = "holds" if worst <= tols.star_conv else "inconclusive"
    return StarVerdict(verdict, kp, worst)


@dataclass(frozen=True)
class InsideReport:
    ok: bool
    margin: float
    escaped_at: tuple[float, np.ndarray] | None = None


def inside_check(spec: SemigroupSpec, grid: Iterable[np.ndarray], t_max: float,
                 mesh: int = 33, tols: Tolerances = DEFAULT) -> InsideReport:
    """True iff the flow of every grid point stays 1 - inside_margin deep."""
    times = np.linspace(0.0, t_max, mesh)[1:]
    sup = 0.0
    for x in grid:
        sup = max(sup, vec_norm(np.asarray(x), spec.norm))
        try:
            states = flow_at(spec, x, times, tols)
        except DomainEscape as esc:
            return InsideReport(False, 0.0, (esc.t, np.asarray(x)))
        for row in states:
            sup = max(sup, vec_norm(row, spec.norm))
    margin = 1.0 - sup
    return InsideReport(margin >= tols.inside_margin, margin)


def generator_estimate(spec: SemigroupSpec, x: np.ndarray, h0: float = 1e-3,
                       tols: Tolerances = DEFAULT) -> np.ndarray:
    """Richardson-extrapolated difference quotient (F_h(x) - x)/h."""
    x = np.asarray(x, dtype=complex).reshape(spec.dim)
    quotients = []
    for h in (h0, h0 / 2, h0 / 4):
        quotients.append((flow(spec, x, h, tols) - x) / h)
    d0, d1, d2 = quotients
    r0 = 2 * d1 - d0
    r1 = 2 * d2 - d1
    return (4 * r1 - r0) / 3
