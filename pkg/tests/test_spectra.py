import numpy as np
import pytest

from semicocycle_lab.errors import (NotScalarLinearPart, ZeroDenominator)
from semicocycle_lab.spectra import (char_ratio, kappa_minus, kappa_plus,
                                     lyapunov_report, resonance, scalar_omega)


def test_kappa_diagonal():
    a = np.diag([3.0, 1.0]).astype(complex)
    assert kappa_plus(a) == pytest.approx(3.0)
    assert kappa_minus(a) == pytest.approx(1.0)


def test_kappa_zero_matrix():
    z = np.zeros((2, 2), dtype=complex)
    assert kappa_plus(z) == 0.0
    assert kappa_minus(z) == 0.0


def test_kappa_duality():
    rng = np.random.default_rng(17)
    for _ in range(20):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert kappa_minus(a) == pytest.approx(-kappa_plus(-a), abs=1e-12)


def test_empirical_jordan_block():
    # the polynomial factor of the Jordan block washes out of the slope
    a = np.array([[1.0, 10.0], [0.0, 1.0]], dtype=complex)
    emp = kappa_plus(a, method="empirical")
    assert abs(emp - 1.0) < 5e-2


def test_lyapunov_report_consistency():
    a = np.diag([0.5, -0.5]).astype(complex)
    rep = lyapunov_report(a)
    assert rep.kappa_plus >= rep.kappa_minus
    assert rep.discrepancy < 5e-2


def test_char_ratio_examples():
    m1 = np.array([[-1.0 + 0j]])
    assert char_ratio(np.diag([3.0, 1.0]).astype(complex), m1) == pytest.approx(2.0)
    assert char_ratio(np.diag([1.0, 2.0]).astype(complex), m1) == pytest.approx(1.0)
    assert char_ratio(np.zeros((2, 2), dtype=complex), m1) == 0.0


def test_char_ratio_zero_denominator():
    with pytest.raises(ZeroDenominator):
        char_ratio(np.eye(2, dtype=complex), np.zeros((1, 1), dtype=complex))


@pytest.mark.parametrize("diag,expected", [
    ([3.0, 1.0], [2]),
    ([1.0, 2.0], [1]),
    ([0.3, 0.1], []),
])
def test_resonance_cases(diag, expected):
    rep = resonance(np.diag(diag).astype(complex), 1.0)
    assert rep.resonant_k == expected
    width = max(diag) - min(diag)
    assert rep.k_max_tested >= int(np.ceil(width))


def test_resonance_termination_bound():
    rep = resonance(np.diag([3.0, 1.0]).astype(complex), 1.0)
    # beyond k_max_tested, k*omega exceeds every real part difference
    max_re = max(d.real for d in rep.diff_set)
    assert (rep.k_max_tested + 1) * rep.omega > max_re + rep.tolerance


def test_resonance_complex_diff():
    b0 = np.diag([1.0 + 0.5j, 0.0]).astype(complex)
    # difference 1 + 0.5j has nonzero imaginary part: not resonant
    assert resonance(b0, 1.0).resonant_k == []


def test_scalar_omega_accepts_and_refuses():
    assert scalar_omega(-2.0 * np.eye(3, dtype=complex)) == pytest.approx(2.0)
    with pytest.raises(NotScalarLinearPart):
        scalar_omega(np.diag([-1.0, -2.0]).astype(complex))
    with pytest.raises(NotScalarLinearPart):
        scalar_omega(np.eye(2, dtype=complex))   # omega would be negative


def test_ell_unitary_invariance():
    rng = np.random.default_rng(23)
    b0 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    a = np.array([[-1.0 + 0j]])
    q, _ = np.linalg.qr(rng.standard_normal((3, 3))
                        + 1j * rng.standard_normal((3, 3)))
    ell1 = char_ratio(b0, a)
    ell2 = char_ratio(q.conj().T @ b0 @ q, a)
    assert ell1 == pytest.approx(ell2, abs=1e-10)
