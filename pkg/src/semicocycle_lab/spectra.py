"""Lyapunov indices, characteristic ratio, and resonance analysis.

kappa_plus/kappa_minus measure the exponential growth of e^{ta}. In finite
dimension they equal the max/min real part of the spectrum; the empirical
mode fits a slope to log ||e^{ta}|| on a late time window as a cross check.
Resonance looks for positive integers k with k*omega inside the difference
set sigma(B0) - sigma(B0), which obstructs unique Taylor coefficients of
the linearizing gauge at degree k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import mat_exp, op_norm, spectrum
from .errors import NotScalarLinearPart, ZeroDenominator
from .tolerances import DEFAULT, Tolerances

EMPIRICAL_WINDOW = (20.0, 60.0)
_EMPIRICAL_SAMPLES = 81


@dataclass(frozen=True)
class LyapunovReport:
    kappa_plus: float
    kappa_minus: float
    method: str                      # "spectral", "empirical", or "both"
    empirical_window: tuple[float, float]
    discrepancy: float               # |spectral - empirical|, 0.0 unless "both"


@dataclass(frozen=True)
class ResonanceReport:
    omega: float
    diff_set: list[complex]
    resonant_k: list[int]
    k_max_tested: int
    tolerance: float

    @property
    def is_resonant(self) -> bool:
        return bool(self.resonant_k)


def _spectral_abscissa(a: np.ndarray, tols: Tolerances) -> float:
    return float(max(lam.real for lam in spectrum(a, tols=tols)))


def _empirical_slope(a: np.ndarray, window, tols: Tolerances) -> float:
    # least-squares slope of log ||e^{ta}|| over the window; the polynomial
    # factor from Jordan blocks contributes O(log t / t) and washes out
    t_lo, t_hi = window
    ts = np.linspace(t_lo, t_hi, _EMPIRICAL_SAMPLES)
    logs = np.empty_like(ts)
    # scale out the dominant exponential so the matrix stays finite
    mu = _spectral_abscissa(a, tols)
    shifted = a - mu * np.eye(a.shape[0])
    for i, t in enumerate(ts):
        m = mat_exp(shifted, t, tols=tols)
        logs[i] = math.log(max(op_norm(m), 1e-300)) + mu * t
    slope = np.polyfit(ts, logs, 1)[0]
    return float(slope)


def kappa_plus(a: np.ndarray, method: str = "spectral",
               window=EMPIRICAL_WINDOW, tols: Tolerances = DEFAULT):
    """Upper Lyapunov index of t -> e^{ta}."""
    a = np.asarray(a, dtype=complex)
    if method == "spectral":
        return _spectral_abscissa(a, tols)
    if method == "empirical":
        return _empirical_slope(a, window, tols)
    if method == "both":
        s = _spectral_abscissa(a, tols)
        e = _empirical_slope(a, window, tols)
        return LyapunovReport(s, kappa_minus(a, "spectral", window, tols),
                              "both", tuple(window), abs(s - e))
    raise ValueError(f"unknown method {method!r}")


def kappa_minus(a: np.ndarray, method: str = "spectral",
                window=EMPIRICAL_WINDOW, tols: Tolerances = DEFAULT) -> float:
    """Lower Lyapunov index; kappa_minus(a) = -kappa_plus(-a)."""
    a = np.asarray(a, dtype=complex)
    if method == "spectral":
        return -_spectral_abscissa(-a, tols)
    if method == "empirical":
        return -_empirical_slope(-a, window, tols)
    raise ValueError(f"unknown method {method!r}")


def lyapunov_report(a: np.ndarray, window=EMPIRICAL_WINDOW,
                    tols: Tolerances = DEFAULT) -> LyapunovReport:
    """Spectral indices plus the empirical cross-check on kappa_plus."""
    a = np.asarray(a, dtype=complex)
    kp = _spectral_abscissa(a, tols)
    km = -_spectral_abscissa(-a, tols)
    disc = abs(kp - _empirical_slope(a, window, tols))
    return LyapunovReport(kp, km, "both", tuple(window), disc)


def char_ratio(b0: np.ndarray, a: np.ndarray,
               tols: Tolerances = DEFAULT) -> float:
    """Characteristic ratio ell = (kappa_plus(B0) - kappa_minus(B0)) / |kappa_plus(A)|."""
    b0 = np.asarray(b0, dtype=complex)
    a = np.asarray(a, dtype=complex)
    ka = _spectral_abscissa(a, tols)
    if abs(ka) < tols.star_margin:
        raise ZeroDenominator(
            f"kappa_plus(A) = {ka:.3e} is within star_margin of zero")
    width = _spectral_abscissa(b0, tols) + _spectral_abscissa(-b0, tols)
    return width / abs(ka)


def scalar_omega(a: np.ndarray, tol: float | None = None,
                 tols: Tolerances = DEFAULT) -> float:
    """Extract omega > 0 from A ~= -omega * I, refusing non-scalar A."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    omega = -(np.trace(a).real) / n
    if tol is None:
        tol = tols.scalar
    dev = op_norm(a + omega * np.eye(n))
    if dev > tol or omega <= 0:
        raise NotScalarLinearPart(
            f"linear part deviates from -omega*I by {dev:.3e} (omega={omega:.6g})")
    return float(omega)


def resonance(b0: np.ndarray, omega: float, tol: float | None = None,
              tols: Tolerances = DEFAULT) -> ResonanceReport:
    """Flag integers k with k*omega in sigma(B0) - sigma(B0).

    Only k up to ceil(width / omega) + 1 can be resonant: beyond that,
    k*omega exceeds every real part in the difference set.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if tol is None:
        tol = tols.res
    b0 = np.asarray(b0, dtype=complex)
    eigs = spectrum(b0, tols=tols)
    diffs = sorted({complex(p - q) for p in eigs for q in eigs},
                   key=lambda z: (z.real, z.imag))
    width = max(d.real for d in diffs)
    k_max = int(math.ceil(max(width, 0.0) / omega)) + 1
    resonant = []
    for k in range(1, k_max + 1):
        target = k * omega
        if any(abs(d.imag) <= tol and abs(d.real - target) <= tol
               for d in diffs):
            resonant.append(k)
    return ResonanceReport(float(omega), diffs, resonant, k_max, float(tol))
