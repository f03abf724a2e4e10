"""Compiled kernel vs pure-python fallback agreement."""

import numpy as np
import pytest

from semicocycle_lab._kernels import IMPL, _poly_py

try:
    from semicocycle_lab._kernels import _poly_cy
except ImportError:
    _poly_cy = None

needs_cy = pytest.mark.skipif(_poly_cy is None,
                              reason="compiled kernel not built")


def _pack_linear_decay(dim):
    # f(x) = -x
    fexps = np.eye(dim, dtype=np.int64)
    fcoefs = -np.eye(dim, dtype=complex)
    return fexps, fcoefs


def _pack_const_b(mat, dim):
    bexps = np.zeros((1, dim), dtype=np.int64)
    bcoefs = mat.astype(complex).reshape(1, -1)
    return bexps, bcoefs


def test_poly_eval_matches_direct():
    exps = np.array([[0, 0], [1, 0], [0, 2]], dtype=np.int64)
    coefs = np.array([[1.0], [2.0], [3.0]], dtype=complex)
    dx = np.array([0.5, 0.25 + 0.1j])
    got = _poly_py.poly_eval(exps, coefs, dx)
    want = 1.0 + 2.0 * dx[0] + 3.0 * dx[1] ** 2
    assert abs(got[0] - want) < 1e-15


def test_flow_exact_linear():
    dim = 1
    fexps, fcoefs = _pack_linear_decay(dim)
    bexps, bcoefs = _pack_const_b(np.zeros((1, 1)), dim)
    y0 = np.array([0.5, 1.0], dtype=complex)
    t_out = np.array([np.log(2.0)])
    Y, status, _ = _poly_py.evolve_poly(fexps, fcoefs, bexps, bcoefs,
                                        np.zeros(dim), y0, t_out,
                                        1e-12, 1e-12, 0, np.inf)
    assert status == _poly_py.OK
    assert abs(Y[0, 0] - 0.25) < 1e-10


def test_coupled_constant_generator():
    dim = 1
    fexps, fcoefs = _pack_linear_decay(dim)
    bexps, bcoefs = _pack_const_b(np.diag([1.0, 2.0]), dim)
    y0 = np.concatenate([[0.3], np.eye(2, dtype=complex).ravel()])
    Y, status, _ = _poly_py.evolve_poly(fexps, fcoefs, bexps, bcoefs,
                                        np.zeros(dim), y0, np.array([1.0]),
                                        1e-12, 1e-12, 0, np.inf)
    v = Y[0, 1:].reshape(2, 2)
    assert status == _poly_py.OK
    assert np.allclose(np.diag(v), np.exp([1.0, 2.0]), rtol=1e-10)


def test_escape_status():
    dim = 1
    # f(x) = +x pushes out of the ball
    fexps = np.eye(dim, dtype=np.int64)
    fcoefs = np.eye(dim, dtype=complex)
    bexps, bcoefs = _pack_const_b(np.zeros((1, 1)), dim)
    y0 = np.array([0.9, 1.0], dtype=complex)
    Y, status, t_stop = _poly_py.evolve_poly(fexps, fcoefs, bexps, bcoefs,
                                             np.zeros(dim), y0,
                                             np.array([5.0]),
                                             1e-10, 1e-10, 0, np.inf)
    assert status == _poly_py.ESCAPED
    assert t_stop < 5.0
    assert np.isnan(Y[0, 0].real)


@needs_cy
def test_impl_selected():
    assert IMPL in ("cython", "python")


@needs_cy
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_compiled_matches_python(seed):
    rng = np.random.default_rng(seed)
    dim, adim = 2, 2
    fexps = np.vstack([np.eye(dim, dtype=np.int64),
                       np.array([[2, 0], [0, 2]], dtype=np.int64)])
    fcoefs = np.vstack([-np.eye(dim), 0.1 * rng.standard_normal((2, dim))]
                       ).astype(complex)
    bexps = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.int64)
    bcoefs = (rng.standard_normal((3, adim * adim))
              + 1j * rng.standard_normal((3, adim * adim))) * 0.5
    x0 = 0.3 * rng.standard_normal(dim).astype(complex)
    y0 = np.concatenate([x0, np.eye(adim, dtype=complex).ravel()])
    t_out = np.array([0.5, 1.0, 2.0])
    args = (fexps, fcoefs, bexps, bcoefs, np.zeros(dim), y0, t_out,
            1e-12, 1e-12, 0, np.inf)
    Yp, sp, tp = _poly_py.evolve_poly(*args)
    Yc, sc, tc = _poly_cy.evolve_poly(*args)
    assert sp == sc
    assert tp == tc
    # same algorithm, same arithmetic order: near machine agreement
    assert np.max(np.abs(np.asarray(Yc) - Yp)) < 1e-12
