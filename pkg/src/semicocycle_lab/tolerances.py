"""Central tolerance registry.

Every numeric knob in the toolkit lives here so that scenario files and the
CLI can override them by name.
"""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    exp: float = 1e-12        # mat_exp relative accuracy
    spec: float = 1e-10       # eigenvalue backward error / spectra-intersect test
    syl: float = 1e-10        # Sylvester residual bound
    denom_floor: float = 1e-12  # rational-map denominator floor
    dstep: float = 1e-6       # spatial finite-difference step
    tstep: float = 1e-4       # time finite-difference step (generator extraction)
    ode: float = 1e-10        # local error tolerance of the flow integrator
    fp: float = 1e-10         # fixed-point residual accepted at scenario load
    gen: float = 1e-6         # generator_estimate agreement
    star_margin: float = 1e-6   # |kappa_+(A)| margin for condition (*)
    star_conv: float = 1e-6   # terminal flow distance for condition (*)
    inside_margin: float = 1e-3  # strict-inside margin
    inv_floor: float = 1e-8   # min singular value for gauge invertibility
    norm: float = 1e-10       # normalization residual (M(x0) = 1)
    lim: float = 1e-9         # Cauchy-tail threshold for the naive limit
    div_cap: float = 1e8      # divergence cap on ||v(t)||
    tail: float = 1e-8        # integral-criterion extrapolated tail
    res: float = 1e-8         # resonance membership tolerance
    bound: float = 1e-6       # Almkvist-bound relative slack
    taylor: float = 1e-6      # Taylor linearization residual scale
    ridge: float = 1e-10      # corrector_fit ridge weight
    rank: float = 1e-8        # relative singular-value cutoff for rank checks
    scalar: float = 1e-8      # ||A + w*I|| cutoff for scalar linear part

    def override(self, **kwargs) -> "Tolerances":
        names = {f.name for f in fields(self)}
        unknown = set(kwargs) - names
        if unknown:
            raise KeyError(f"unknown tolerance name(s): {sorted(unknown)}")
        bad = {k: v for k, v in kwargs.items() if not v > 0}
        if bad:
            raise ValueError(f"tolerance overrides must be positive: {bad}")
        return replace(self, **kwargs)


DEFAULT = Tolerances()
