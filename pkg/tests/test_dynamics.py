import numpy as np
import pytest

from semicocycle_lab.dynamics import (SemigroupSpec, condition_star, flow,
                                      flow_at, generator_estimate,
                                      inside_check, linear_part)
from semicocycle_lab.errors import ToolkitError
from semicocycle_lab.mapexpr import Polynomial, map_eval
from semicocycle_lab.sampling import sample_ball

from conftest import linear_flow, random_contraction


def test_flow_linear_decay(f1):
    x = np.array([0.5 + 0j])
    assert abs(flow(f1, x, np.log(2.0))[0] - 0.25) < 1e-10


def test_flow_distinct_rates():
    f = linear_flow(3)
    # replace with rates 1, 1/2, 1/3
    terms = {}
    for k in range(3):
        alpha = tuple(1 if j == k else 0 for j in range(3))
        col = np.zeros(3, dtype=complex)
        col[k] = -1.0 / (k + 1)
        terms[alpha] = col
    gen = Polynomial(3, (3,), np.zeros(3), terms)
    f = SemigroupSpec(3, "sup", gen, np.zeros(3), 0.6)
    got = flow(f, 0.5 * np.ones(3), 1.0)
    want = 0.5 * np.exp([-1.0, -0.5, -1.0 / 3.0])
    assert np.max(np.abs(got - want)) < 1e-10


def test_flow_semigroup_property(f1):
    x = np.array([0.4 + 0.1j])
    lhs = flow(f1, x, 1.3)
    rhs = flow(f1, flow(f1, x, 0.5), 0.8)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_fixed_point_validation():
    # generator with nonzero value at the claimed fixed point
    gen = Polynomial(1, (1,), np.zeros(1), {(0,): [0.5], (1,): [-1.0]})
    spec = SemigroupSpec(1, "spectral", gen, np.zeros(1), 0.5)
    with pytest.raises(ToolkitError):
        spec.validate()


def test_linear_part_exact():
    rng = np.random.default_rng(5)
    f = random_contraction(rng, 2)
    a = linear_part(f)
    # columns are directional derivatives at the fixed point
    for k in range(2):
        h = np.zeros(2)
        h[k] = 1.0
        eps = 1e-7
        fd = (np.asarray(map_eval(f.generator_f, eps * h))
              - np.asarray(map_eval(f.generator_f, np.zeros(2)))) / eps
        assert np.max(np.abs(a[:, k] - fd)) < 1e-5


def test_condition_star_holds(f1):
    grid = [np.array([z]) for z in (0.1, 0.4, -0.3, 0.2j)]
    v = condition_star(f1, grid, t_max=20.0)
    assert v.holds
    assert v.kappa_plus == pytest.approx(-1.0)


def test_condition_star_fails_for_expansion():
    gen = Polynomial(1, (1,), np.zeros(1), {(1,): [1.0]})
    f = SemigroupSpec(1, "spectral", gen, np.zeros(1), 0.5)
    v = condition_star(f, [np.array([0.1])], t_max=2.0)
    assert not v.holds


def test_inside_check(f1):
    rep = inside_check(f1, [np.array([0.5])], t_max=10.0)
    assert rep.ok
    assert rep.margin > 0.4   # contraction only improves the margin


def test_generator_estimate_matches_polynomial():
    rng = np.random.default_rng(9)
    f = random_contraction(rng, 2)
    x = np.array([0.1, -0.2 + 0.05j])
    est = generator_estimate(f, x)
    direct = np.asarray(map_eval(f.generator_f, x))
    assert np.max(np.abs(est - direct)) < 1e-6


def test_flow_at_multiple_times(f1):
    x = np.array([0.5 + 0j])
    ts = np.array([0.5, 1.0, 2.0])
    states = flow_at(f1, x, ts)
    assert np.allclose(states[:, 0], 0.5 * np.exp(-ts), atol=1e-10)


def test_sample_ball_stays_inside():
    for norm in ("spectral", "sup"):
        pts = sample_ball(3, 0.5, 50, seed=4, norm=norm)
        for p in pts:
            r = np.linalg.norm(p) if norm == "spectral" else np.abs(p).max()
            assert r <= 0.5


def test_sample_ball_deterministic():
    a = sample_ball(2, 0.4, 10, seed=1)
    b = sample_ball(2, 0.4, 10, seed=1)
    assert np.array_equal(np.asarray(a), np.asarray(b))
