import numpy as np
import pytest

from semicocycle_lab.dynamics import SemigroupSpec
from semicocycle_lab.mapexpr import Polynomial, poly_constant
from semicocycle_lab.semicocycle import SemicocycleSpec


def linear_flow(dim=1, rate=1.0, radius=0.6, norm="spectral"):
    """f(x) = -rate * x on the given dimension."""
    terms = {}
    for k in range(dim):
        alpha = tuple(1 if j == k else 0 for j in range(dim))
        col = np.zeros(dim, dtype=complex)
        col[k] = -rate
        terms[alpha] = col
    gen = Polynomial(dim, (dim,), np.zeros(dim), terms)
    return SemigroupSpec(dim, norm, gen, np.zeros(dim), radius)


@pytest.fixture
def f1():
    return linear_flow(1)


@pytest.fixture
def uniq_spec(f1):
    b = poly_constant(np.diag([1.0, 2.0]).astype(complex), 1, np.zeros(1))
    return SemicocycleSpec.generated(b, f1)


@pytest.fixture
def ex1_spec(f1):
    gauge = Polynomial(1, (2, 2), np.zeros(1),
                       {(0,): np.eye(2), (1,): [[0.0, 1.0], [1.0, 0.0]]})
    return SemicocycleSpec.closed_form(
        gauge, np.diag([3.0, 1.0]).astype(complex), f1)


def random_contraction(rng, dim, degree=2, radius=0.5, norm="spectral"):
    """Contracting polynomial generator: strictly stable linear part plus a
    small higher-order perturbation vanishing at 0."""
    terms = {}
    lin = -np.eye(dim, dtype=complex) * rng.uniform(0.5, 1.5)
    for k in range(dim):
        alpha = tuple(1 if j == k else 0 for j in range(dim))
        terms[alpha] = lin[:, k]
    if degree >= 2:
        for _ in range(dim):
            alpha = tuple(int(v) for v in rng.multinomial(2, np.ones(dim) / dim))
            coef = 0.2 * (rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
            terms[alpha] = terms.get(alpha, np.zeros(dim, dtype=complex)) + coef
    gen = Polynomial(dim, (dim,), np.zeros(dim), terms)
    return SemigroupSpec(dim, norm, gen, np.zeros(dim), radius)


def random_generator_poly(rng, dim, adim, degree=1, scale=0.5):
    """Matrix-valued polynomial B(x) with a random constant part."""
    terms = {(0,) * dim: scale * (rng.standard_normal((adim, adim))
                                  + 1j * rng.standard_normal((adim, adim)))}
    for d in range(1, degree + 1):
        alpha = tuple(int(v) for v in rng.multinomial(d, np.ones(dim) / dim))
        terms[alpha] = scale * (rng.standard_normal((adim, adim))
                                + 1j * rng.standard_normal((adim, adim)))
    return Polynomial(dim, (adim, adim), np.zeros(dim), terms)
