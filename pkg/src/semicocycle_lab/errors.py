"""Exception hierarchy shared by all modules."""


class ToolkitError(Exception):
    """Base class for all semicocycle-lab errors."""


class MatrixOverflow(ToolkitError):
    """Matrix exponential left the floating-point range."""

    def __init__(self, magnitude: float):
        self.magnitude = magnitude
        super().__init__(f"matrix exponential overflow, ||tA|| = {magnitude:g}")


class SpectrumError(ToolkitError):
    """Eigenvalue iteration failed to converge."""


class ResonantSylvester(ToolkitError):
    """Sylvester equation is singular: the spectra of P and Q intersect."""

    def __init__(self, lam_p: complex, lam_q: complex, degree: int | None = None):
        self.lam_p = lam_p
        self.lam_q = lam_q
        self.degree = degree
        where = f" at degree {degree}" if degree is not None else ""
        super().__init__(
            f"resonant Sylvester equation{where}: eigenvalue pair "
            f"({lam_p:.6g}, {lam_q:.6g})"
        )


class NearPole(ToolkitError):
    """Rational map evaluated too close to a zero of its denominator."""

    def __init__(self, denom: complex, floor: float):
        self.denom = denom
        self.floor = floor
        super().__init__(f"denominator {abs(denom):.3g} below floor {floor:.3g}")


class DomainEscape(ToolkitError):
    """Trajectory left the closed unit ball."""

    def __init__(self, t: float, norm: float):
        self.t = t
        self.norm = norm
        super().__init__(f"trajectory escaped the unit ball at t = {t:.6g} (||x|| = {norm:.6g})")


class StiffnessError(ToolkitError):
    """Adaptive step size underflowed."""

    def __init__(self, t: float, h: float):
        self.t = t
        self.h = h
        super().__init__(f"step size underflow at t = {t:.6g} (h = {h:.3g})")


class NonInvertibleGauge(ToolkitError):
    """Gauge mapping fails the invertibility grid check."""


class NotScalarLinearPart(ToolkitError):
    """The linear part of the semigroup generator is not a scalar operator."""


class ZeroDenominator(ToolkitError):
    """Characteristic ratio undefined: kappa_+(A) is (numerically) zero."""


class FitRejected(ToolkitError):
    """Corrector fit failed its post-hoc corrected-limit audit."""


class ScenarioError(ToolkitError):
    """Scenario file failed validation at load time."""
