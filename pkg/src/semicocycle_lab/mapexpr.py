"""Evaluable holomorphic map expressions.

Three variants cover every closed form appearing in the scenarios:

* Polynomial      -- multi-index coefficient table centered at the scenario's
                     fixed point; coefficients are scalars, vectors or
                     matrices depending on the output shape.
* RationalEntry   -- entrywise scalar-polynomial numerators over one common
                     scalar-polynomial denominator.
* ExpPolyScalar   -- exp(P(x)) * R(x) with P a scalar polynomial and R a
                     Polynomial or RationalEntry.

Complex numbers serialize as [re, im] pairs throughout.
"""

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from .errors import NearPole, ToolkitError
from .tolerances import DEFAULT, Tolerances

MultiIndex = tuple[int, ...]


def mi_degree(alpha: MultiIndex) -> int:
    return int(sum(alpha))


def _as_center(center, dim: int) -> np.ndarray:
    c = np.asarray(center, dtype=complex).reshape(dim)
    return c


@dataclass(frozen=True)
class Polynomial:
    """sum_alpha C_alpha * (x - center)^alpha."""

    input_dim: int
    output_shape: tuple[int, ...]
    center: np.ndarray
    terms: dict[MultiIndex, np.ndarray]
    _packed: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_center(self.center, self.input_dim))
        clean: dict[MultiIndex, np.ndarray] = {}
        for alpha, coef in self.terms.items():
            alpha = tuple(int(k) for k in alpha)
            if len(alpha) != self.input_dim or any(k < 0 for k in alpha):
                raise ToolkitError(f"bad multi-index {alpha} for dim {self.input_dim}")
            coef = np.asarray(coef, dtype=complex).reshape(self.output_shape)
            if not np.all(np.isfinite(coef.real)) or not np.all(np.isfinite(coef.imag)):
                raise ToolkitError(f"non-finite coefficient at {alpha}")
            clean[alpha] = coef
        object.__setattr__(self, "terms", clean)

    @property
    def degree(self) -> int:
        return max((mi_degree(a) for a in self.terms), default=0)

    def packed(self):
        """(exps, flat coeffs) arrays in sorted multi-index order."""
        if not self._packed:
            alphas = sorted(self.terms)
            if alphas:
                exps = np.array(alphas, dtype=np.int64).reshape(len(alphas), self.input_dim)
                coeffs = np.array([self.terms[a].ravel() for a in alphas], dtype=complex)
            else:
                exps = np.zeros((0, self.input_dim), dtype=np.int64)
                coeffs = np.zeros((0, int(np.prod(self.output_shape, initial=1))),
                                  dtype=complex)
            self._packed.append((exps, coeffs))
        return self._packed[0]

    def eval(self, x: np.ndarray) -> np.ndarray:
        exps, coeffs = self.packed()
        dx = np.asarray(x, dtype=complex).reshape(self.input_dim) - self.center
        return _kernels.poly_eval(exps, coeffs, dx).reshape(self.output_shape)

    def dderiv(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        exps, coeffs = self.packed()
        dx = np.asarray(x, dtype=complex).reshape(self.input_dim) - self.center
        hv = np.asarray(h, dtype=complex).reshape(self.input_dim)
        return _kernels.poly_dderiv(exps, coeffs, dx, hv).reshape(self.output_shape)


@dataclass(frozen=True)
class RationalEntry:
    """numerator(x) / denominator(x) with one common scalar denominator."""

    numerator: Polynomial
    denominator: Polynomial  # scalar-valued: output_shape ()

    def __post_init__(self):
        if self.denominator.output_shape != ():
            raise ToolkitError("denominator must be scalar-valued")
        if self.numerator.input_dim != self.denominator.input_dim:
            raise ToolkitError("numerator/denominator dimension mismatch")

    @property
    def input_dim(self) -> int:
        return self.numerator.input_dim

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.numerator.output_shape


@dataclass(frozen=True)
class ExpPolyScalar:
    """exp(P(x)) * R(x), P scalar polynomial."""

    p: Polynomial  # scalar-valued
    r: Union[Polynomial, RationalEntry]

    def __post_init__(self):
        if self.p.output_shape != ():
            raise ToolkitError("exponent polynomial must be scalar-valued")
        if self.p.input_dim != self.r.input_dim:
            raise ToolkitError("exponent/base dimension mismatch")

    @property
    def input_dim(self) -> int:
        return self.p.input_dim

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.r.output_shape


MapExpr = Union[Polynomial, RationalEntry, ExpPolyScalar]


def map_eval(m: MapExpr, x: np.ndarray, tols: Tolerances = DEFAULT) -> np.ndarray:
    """Value of the expression at x; raises NearPole on denominator underflow."""
    if isinstance(m, Polynomial):
        return m.eval(x)
    if isinstance(m, RationalEntry):
        den = complex(m.denominator.eval(x))
        if abs(den) < tols.denom_floor:
            raise NearPole(den, tols.denom_floor)
        return m.numerator.eval(x) / den
    if isinstance(m, ExpPolyScalar):
        return np.exp(complex(m.p.eval(x))) * map_eval(m.r, x, tols)
    raise TypeError(f"not a MapExpr: {type(m)!r}")


def map_dderiv(m: MapExpr, x: np.ndarray, h: np.ndarray,
               tols: Tolerances = DEFAULT) -> np.ndarray:
    """Directional derivative at x along h.

    All variants are differentiated exactly from their coefficient data
    (quotient/product rules); accuracy is far inside the O(dstep^2)
    finite-difference contract.
    """
    if isinstance(m, Polynomial):
        return m.dderiv(x, h)
    if isinstance(m, RationalEntry):
        den = complex(m.denominator.eval(x))
        if abs(den) < tols.denom_floor:
            raise NearPole(den, tols.denom_floor)
        num = m.numerator.eval(x)
        dnum = m.numerator.dderiv(x, h)
        dden = complex(m.denominator.dderiv(x, h))
        return (dnum * den - num * dden) / (den * den)
    if isinstance(m, ExpPolyScalar):
        ep = np.exp(complex(m.p.eval(x)))
        dp = complex(m.p.dderiv(x, h))
        return ep * (dp * map_eval(m.r, x, tols) + map_dderiv(m.r, x, h, tols))
    raise TypeError(f"not a MapExpr: {type(m)!r}")


# ---------------------------------------------------------------------------
# Polynomial algebra on coefficient tables (used by the Taylor linearizer and
# the closed-form generator identity).
# ---------------------------------------------------------------------------

def poly_zero(input_dim: int, output_shape: tuple[int, ...], center) -> Polynomial:
    return Polynomial(input_dim, output_shape, center, {})

def poly_constant(value: np.ndarray, input_dim: int, center) -> Polynomial:
    value = np.asarray(value, dtype=complex)
    return Polynomial(input_dim, value.shape, center,
                      {(0,) * input_dim: value})

def poly_identity(adim: int, input_dim: int, center) -> Polynomial:
    return poly_constant(np.eye(adim, dtype=complex), input_dim, center)


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    terms = {a: c.copy() for a, c in p.terms.items()}
    for a, c in q.terms.items():
        terms[a] = terms.get(a, 0) + c
    return Polynomial(p.input_dim, p.output_shape, p.center, terms)


def poly_scale(p: Polynomial, s: complex) -> Polynomial:
    return Polynomial(p.input_dim, p.output_shape, p.center,
                      {a: s * c for a, c in p.terms.items()})


def _add_term(terms: dict, alpha: MultiIndex, value: np.ndarray):
    if alpha in terms:
        terms[alpha] = terms[alpha] + value
    else:
        terms[alpha] = value


def poly_matmul(p: Polynomial, q: Polynomial, max_degree: int | None = None) -> Polynomial:
    """Matrix-product polynomial (P*Q)(x), optionally truncated by degree."""
    scalar = p.output_shape == () or q.output_shape == ()
    terms: dict[MultiIndex, np.ndarray] = {}
    for a, ca in p.terms.items():
        for b, cb in q.terms.items():
            gamma = tuple(i + j for i, j in zip(a, b))
            if max_degree is not None and mi_degree(gamma) > max_degree:
                continue
            _add_term(terms, gamma, ca * cb if scalar else ca @ cb)
    if scalar:
        shape = q.output_shape if p.output_shape == () else p.output_shape
    else:
        shape = (np.zeros(p.output_shape) @ np.zeros(q.output_shape)).shape
    return Polynomial(p.input_dim, shape, p.center, terms)


def poly_dderiv_contract(m: Polynomial, f: Polynomial,
                         max_degree: int | None = None) -> Polynomial:
    """Coefficients of x -> M'(x)[f(x)] for matrix-valued M, vector-valued f."""
    if f.output_shape != (m.input_dim,):
        raise ToolkitError("f must be vector-valued of the input dimension")
    terms: dict[MultiIndex, np.ndarray] = {}
    for alpha, c in m.terms.items():
        for k, ak in enumerate(alpha):
            if ak == 0:
                continue
            reduced = tuple(a - (1 if i == k else 0) for i, a in enumerate(alpha))
            for beta, g in f.terms.items():
                gamma = tuple(i + j for i, j in zip(reduced, beta))
                if max_degree is not None and mi_degree(gamma) > max_degree:
                    continue
                _add_term(terms, gamma, (ak * g[k]) * c)
    return Polynomial(m.input_dim, m.output_shape, m.center, terms)


def poly_homogeneous(p: Polynomial, k: int) -> Polynomial:
    return Polynomial(p.input_dim, p.output_shape, p.center,
                      {a: c for a, c in p.terms.items() if mi_degree(a) == k})


def poly_truncate(p: Polynomial, max_degree: int) -> Polynomial:
    return Polynomial(p.input_dim, p.output_shape, p.center,
                      {a: c for a, c in p.terms.items() if mi_degree(a) <= max_degree})


def poly_inverse_series(m: Polynomial, max_degree: int) -> Polynomial:
    """Truncated Neumann series for M(x)^{-1}; M's constant term must be invertible."""
    adim = m.output_shape[0]
    zero = (0,) * m.input_dim
    m0 = m.terms.get(zero, np.zeros(m.output_shape, dtype=complex))
    m0_inv = np.linalg.inv(m0)
    # M = M0 (I + K) with K = M0^{-1}(M - M0); inv = (sum (-K)^j) M0^{-1}
    k_terms = {a: m0_inv @ c for a, c in m.terms.items() if a != zero}
    k = Polynomial(m.input_dim, m.output_shape, m.center, k_terms)
    acc = poly_identity(adim, m.input_dim, m.center)
    power = poly_identity(adim, m.input_dim, m.center)
    for _ in range(max_degree):
        power = poly_truncate(poly_matmul(poly_scale(k, -1.0), power, max_degree),
                              max_degree)
        if not power.terms:
            break
        acc = poly_add(acc, power)
    return poly_matmul(acc, poly_constant(m0_inv, m.input_dim, m.center), max_degree)


# ---------------------------------------------------------------------------
# JSON serialization ([re, im] pairs for every complex number).
# ---------------------------------------------------------------------------

def complex_to_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]

def complex_from_json(v) -> complex:
    return complex(v[0], v[1])

def array_to_json(a: np.ndarray):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return complex_to_json(a[()])
    return [array_to_json(row) for row in a]

def array_from_json(v, shape=None) -> np.ndarray:
    def build(node):
        if isinstance(node, (list, tuple)) and len(node) == 2 and all(
                isinstance(c, (int, float)) for c in node):
            return complex(node[0], node[1])
        return [build(child) for child in node]
    arr = np.asarray(build(v), dtype=complex)
    if shape is not None:
        arr = arr.reshape(shape)
    return arr


def _poly_terms_to_json(p: Polynomial) -> list:
    return [{"alpha": list(a), "value": array_to_json(c)} for a, c in
            sorted(p.terms.items())]

def _poly_terms_from_json(entries, input_dim, output_shape, center) -> Polynomial:
    terms = {}
    for e in entries:
        alpha = tuple(int(k) for k in e["alpha"])
        terms[alpha] = array_from_json(e["value"], output_shape)
    return Polynomial(input_dim, tuple(output_shape), center, terms)


def mapexpr_to_json(m: MapExpr) -> dict:
    if isinstance(m, Polynomial):
        return {"variant": "polynomial",
                "input_dim": m.input_dim,
                "output_shape": list(m.output_shape),
                "coeffs": _poly_terms_to_json(m)}
    if isinstance(m, RationalEntry):
        return {"variant": "rational",
                "input_dim": m.input_dim,
                "output_shape": list(m.output_shape),
                "numerators": _poly_terms_to_json(m.numerator),
                "denominator": _poly_terms_to_json(m.denominator)}
    if isinstance(m, ExpPolyScalar):
        return {"variant": "exp_poly",
                "input_dim": m.input_dim,
                "exponent": _poly_terms_to_json(m.p),
                "base": mapexpr_to_json(m.r)}
    raise TypeError(f"not a MapExpr: {type(m)!r}")


def mapexpr_from_json(obj: dict, center) -> MapExpr:
    try:
        return _mapexpr_from_json(obj, center)
    except KeyError as exc:
        raise ToolkitError(f"MapExpr JSON missing field {exc}") from exc


def _mapexpr_from_json(obj: dict, center) -> MapExpr:
    variant = obj.get("variant")
    if variant == "polynomial":
        return _poly_terms_from_json(obj["coeffs"], int(obj["input_dim"]),
                                     tuple(obj["output_shape"]), center)
    if variant == "rational":
        dim = int(obj["input_dim"])
        num = _poly_terms_from_json(obj["numerators"], dim,
                                    tuple(obj["output_shape"]), center)
        den = _poly_terms_from_json(obj["denominator"], dim, (), center)
        return RationalEntry(num, den)
    if variant == "exp_poly":
        dim = int(obj["input_dim"])
        p = _poly_terms_from_json(obj["exponent"], dim, (), center)
        return ExpPolyScalar(p, mapexpr_from_json(obj["base"], center))
    raise ToolkitError(f"unknown MapExpr variant {variant!r}")
