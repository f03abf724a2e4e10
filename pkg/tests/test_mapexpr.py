import json

import numpy as np
import pytest

from semicocycle_lab.errors import NearPole, ToolkitError
from semicocycle_lab.mapexpr import (ExpPolyScalar, Polynomial, RationalEntry,
                                     map_dderiv, map_eval, mapexpr_from_json,
                                     mapexpr_to_json, poly_dderiv_contract,
                                     poly_homogeneous, poly_identity,
                                     poly_inverse_series, poly_matmul)


def scalar_poly(terms, dim=1):
    return Polynomial(dim, (), np.zeros(dim), terms)


def test_polynomial_eval_matrix_valued():
    p = Polynomial(1, (2, 2), np.zeros(1),
                   {(0,): np.eye(2), (1,): [[0, 1], [1, 0]]})
    m = map_eval(p, np.array([0.3]))
    assert np.allclose(m, [[1.0, 0.3], [0.3, 1.0]])


def test_polynomial_center_shift():
    p = Polynomial(1, (), np.array([0.5]), {(1,): 2.0})
    assert map_eval(p, np.array([0.5])) == pytest.approx(0.0)
    assert map_eval(p, np.array([1.0])) == pytest.approx(1.0)


def test_rational_quotient_rule():
    num = scalar_poly({(1,): 1.0})
    den = scalar_poly({(0,): 1.0, (2,): -1.0})   # 1 - x^2
    r = RationalEntry(num, den)
    x = np.array([0.4])
    # d/dx [x / (1-x^2)] = (1+x^2)/(1-x^2)^2
    want = (1 + 0.16) / (1 - 0.16) ** 2
    got = map_dderiv(r, x, np.array([1.0]))
    assert got == pytest.approx(want, rel=1e-12)


def test_rational_near_pole():
    r = RationalEntry(scalar_poly({(0,): 1.0}),
                      scalar_poly({(0,): 0.0, (1,): 1.0}))
    with pytest.raises(NearPole):
        map_eval(r, np.array([1e-15]))


def test_exp_poly_product_rule():
    p = scalar_poly({(1,): 2.0})
    r = ExpPolyScalar(p, poly_identity(1, 1, np.zeros(1)))
    x = np.array([0.3])
    got = map_dderiv(r, x, np.array([1.0]))
    want = 2.0 * np.exp(0.6)
    assert np.allclose(got, [[want]], rtol=1e-12)


def test_poly_matmul_and_truncation():
    a = Polynomial(1, (2, 2), np.zeros(1), {(1,): np.eye(2)})
    b = Polynomial(1, (2, 2), np.zeros(1), {(2,): np.eye(2)})
    c = poly_matmul(a, b)
    assert set(c.terms) == {(3,)}
    assert poly_matmul(a, b, max_degree=2).terms == {}


def test_poly_dderiv_contract_euler_identity():
    # M homogeneous of degree k contracted with f(x)=x gives k*M
    m = Polynomial(2, (2, 2), np.zeros(2), {(2, 1): np.eye(2)})
    f = Polynomial(2, (2,), np.zeros(2),
                   {(1, 0): [1.0, 0.0], (0, 1): [0.0, 1.0]})
    d = poly_dderiv_contract(m, f, 3)
    assert np.allclose(d.terms[(2, 1)], 3 * np.eye(2))


def test_poly_inverse_series():
    m = Polynomial(1, (2, 2), np.zeros(1),
                   {(0,): np.eye(2), (1,): [[0, 1], [1, 0]]})
    inv = poly_inverse_series(m, 6)
    x = np.array([0.2])
    prod = map_eval(m, x) @ map_eval(inv, x)
    assert np.max(np.abs(prod - np.eye(2))) < 0.2 ** 7 * 2


def test_homogeneous_part():
    p = scalar_poly({(0,): 1.0, (1,): 2.0, (2,): 3.0})
    h = poly_homogeneous(p, 1)
    assert set(h.terms) == {(1,)}


def test_bad_multi_index_rejected():
    with pytest.raises(ToolkitError):
        Polynomial(1, (), np.zeros(1), {(1, 0): 1.0})


def test_nonfinite_coefficient_rejected():
    with pytest.raises(ToolkitError):
        Polynomial(1, (), np.zeros(1), {(1,): np.nan})


@pytest.mark.parametrize("variant", ["polynomial", "rational", "exp_poly"])
def test_json_roundtrip(variant):
    if variant == "polynomial":
        m = Polynomial(2, (2, 2), np.zeros(2),
                       {(0, 0): np.eye(2), (1, 1): 1j * np.ones((2, 2))})
    elif variant == "rational":
        m = RationalEntry(
            Polynomial(1, (2, 2), np.zeros(1), {(1,): np.eye(2)}),
            scalar_poly({(0,): 1.0, (2,): -1.0}))
    else:
        m = ExpPolyScalar(scalar_poly({(1,): 2.0}),
                          poly_identity(1, 1, np.zeros(1)))
    blob = json.dumps(mapexpr_to_json(m))
    m2 = mapexpr_from_json(json.loads(blob),
                           np.zeros(m.input_dim))
    x = 0.1 * np.ones(m.input_dim)
    assert np.allclose(np.asarray(map_eval(m, x)),
                       np.asarray(map_eval(m2, x)), rtol=1e-15)
