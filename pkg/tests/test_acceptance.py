"""Acceptance gate: exact example reproduction plus randomized property
suites, one pass/fail line per criterion.

Entrywise comparisons against exponentially large reference values are
checked relative to max(1, |exact|); a float64 ODE solve cannot hit an
absolute 1e-8 at magnitudes ~e^10 (see the project ledger)."""

import json
import subprocess
import sys

import numpy as np
import pytest

from semicocycle_lab.algebra import mat_exp, op_norm
from semicocycle_lab.dynamics import SemigroupSpec, flow, flow_at
from semicocycle_lab.linearize import (cauchy_time, coboundary_check,
                                       corrected_limit, corrector_fit,
                                       integral_criterion, naive_limit,
                                       taylor_linearize, verify_cohomology)
from semicocycle_lab.mapexpr import (ExpPolyScalar, Polynomial, RationalEntry,
                                     map_eval, poly_constant, poly_identity)
from semicocycle_lab.sampling import sample_ball
from semicocycle_lab.scenarios import builtin
from semicocycle_lab.semicocycle import (SemicocycleSpec, chain_residual,
                                         evolve, gamma_at, generator_eval)
from semicocycle_lab.spectra import (char_ratio, kappa_minus, kappa_plus,
                                     resonance)
from semicocycle_lab.tolerances import DEFAULT

from conftest import linear_flow, random_contraction, random_generator_poly


def report(criterion, name, ok):
    print(f"ACCEPTANCE {criterion} ({name}): {'PASS' if ok else 'FAIL'}")
    assert ok, f"acceptance criterion {criterion} failed: {name}"


def rand_point(rng, dim, radius=0.3):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return radius * rng.uniform(0.2, 1.0) * v / np.linalg.norm(v)


def rel_err(got, want):
    got = np.asarray(got)
    want = np.asarray(want)
    return float(np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))))


# ---------------------------------------------------------------------------

def test_criterion_1_constant_generator_reproduction():
    sc = builtin("examp-uniq")
    f, s = sc.semigroup, sc.semicocycle
    worst = 0.0
    times = [0.5, 1.0, 2.0, 3.5, 5.0]
    for x0 in (0.0, 0.3, 0.6):
        path = evolve(f, s, np.array([x0], dtype=complex), times)
        for t, g in zip(times, path.gammas):
            worst = max(worst, rel_err(g, np.diag(np.exp([t, 2 * t]))))
    ok = worst <= 1e-8

    grid = [np.array([z], dtype=complex) for z in (0.0, 0.2, 0.4, 0.55)]
    ident = poly_identity(2, 1, np.zeros(1))
    shear = Polynomial(1, (2, 2), np.zeros(1),
                       {(0,): np.eye(2), (1,): [[0.0, 1.0], [0.0, 0.0]]})
    r_id = verify_cohomology(f, s, ident, s.b0, grid)
    r_sh = verify_cohomology(f, s, shear, s.b0, grid)
    ok = ok and r_id <= 1e-8 and r_sh <= 1e-8
    ok = ok and 1 in resonance(s.b0, 1.0).resonant_k
    report(1, "constant-generator example, two gauges, resonance", ok)


def test_criterion_2_resonant_closed_form():
    sc = builtin("ex1")
    f, s = sc.semigroup, sc.semicocycle
    # exact rational generator of the closed form, evolved as an ODE
    num = Polynomial(1, (2, 2), np.zeros(1),
                     {(0,): np.diag([3.0, 1.0]),
                      (1,): [[0.0, 3.0], [-1.0, 0.0]],
                      (2,): np.diag([-2.0, -4.0])})
    den = Polynomial(1, (), np.zeros(1), {(0,): 1.0, (2,): -1.0})
    s_ode = SemicocycleSpec.generated(RationalEntry(num, den), f)
    times = [0.5, 1.0, 2.0, 4.0]
    worst = 0.0
    for x0 in (0.6, -0.45, 0.3 + 0.3j):
        x = np.array([x0], dtype=complex)
        p_ode = evolve(f, s_ode, x, times)
        p_cf = evolve(f, s, x, times)
        for g1, g2 in zip(p_ode.gammas, p_cf.gammas):
            worst = max(worst, rel_err(g1, g2))
    ok = worst <= 1e-7

    xs = [np.array([z], dtype=complex) for z in (0.5, 0.3, -0.2, 0.1 + 0.2j)]
    ok = ok and naive_limit(f, s, xs).verdict.status == "Diverged"
    ok = ok and integral_criterion(f, s, xs[0]).kind == "divergent"
    ell = char_ratio(s.b0, np.array([[-1.0 + 0j]]))
    ok = ok and abs(ell - 2.0) <= 1e-9
    corr = corrector_fit(f, s, 2, xs)
    res = corrected_limit(f, s, corr.n, xs)
    ok = ok and res.verdict.status == "Converged"
    resid = verify_cohomology(f, s, corr.n, s.b0, xs)
    ok = ok and resid <= 1e-6
    report(2, "resonant closed form: divergence and corrected recovery", ok)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_criterion_3_scalar_coboundary(n):
    sc = builtin("ex-2", n)
    f, s = sc.semigroup, sc.semicocycle
    ok = op_norm(np.asarray(s.b0)) <= 1e-8
    ok = ok and coboundary_check(f, s, sc.sample_points())

    samples = [p for p in sample_ball(n, 0.4, 20, seed=3)]
    res = naive_limit(f, s, samples)
    ok = ok and res.verdict.status == "Converged"
    worst = 0.0
    for key, m in res.m_samples.items():
        x = np.array(key)
        want = np.exp(sum((2.0 * x[k]) ** (k + 1) for k in range(n)))
        worst = max(worst, abs(m[0, 0] - want))
    ok = ok and worst <= 1e-8

    if n == 1:
        x = np.array([0.2 - 0.1j])
        rep = integral_criterion(f, s, x)
        ok = ok and rep.kind == "finite"
        ok = ok and abs(rep.value - 2.0 * abs(x[0])) <= 1e-6
    report(3, f"scalar coboundary truncation n={n}", ok)


def test_criterion_4_taylor_vs_limit_cross_validation():
    f = linear_flow(1)
    b = Polynomial(1, (2, 2), np.zeros(1),
                   {(0,): np.diag([0.3, 0.1]), (1,): [[0.0, 1.0], [1.0, 0.0]]})
    s = SemicocycleSpec.generated(b, f)
    ok = resonance(s.b0, 1.0).resonant_k == []
    # degree-3 truncation leaves an O(r^4) tail (constant ~0.03), so the
    # comparison runs on a ball where that tail sits below the thresholds
    r = 0.02
    grid = [np.array([z * r], dtype=complex)
            for z in (1.0, -0.8, 0.5 + 0.5j, -0.3 - 0.9j, 0.1)]
    tay = taylor_linearize(f, s, 3, samples=grid)
    nav = naive_limit(f, s, grid)
    ok = ok and nav.verdict.status == "Converged"
    agree = max(np.max(np.abs(nav.m_samples[k] - tay.m_samples[k]))
                for k in tay.m_samples)
    ok = ok and agree <= 1e-6
    ok = ok and tay.cohomology_residual <= 1e-8
    # pin the truncation behavior itself: residual decays fourth order
    tay2 = taylor_linearize(f, s, 3, samples=[np.array([0.2 + 0j]),
                                              np.array([-0.18 + 0j])])
    ratio = tay2.cohomology_residual / tay.cohomology_residual
    ok = ok and ratio > 1e3   # (0.2 / 0.02)^4 = 1e4, allow slack
    report(4, "Taylor vs naive-limit cross-validation", ok)


# ---------------------------------------------------------------------------
# criterion 5: randomized property suites, >= 200 cases each

N_CASES = 200


def test_criterion_5a_semigroup_law():
    rng = np.random.default_rng(50)
    worst = 0.0
    for _ in range(N_CASES):
        f = random_contraction(rng, int(rng.integers(1, 4)))
        x = rand_point(rng, f.dim)
        t, u = rng.uniform(0.1, 2.0, 2)
        lhs = flow(f, x, t + u)
        rhs = flow(f, flow(f, x, u), t)
        resid = float(np.max(np.abs(lhs - rhs)))
        bound = 10 * DEFAULT.ode * (1 + t + u)
        worst = max(worst, resid / bound)
    report("5a", f"semigroup law residual (max ratio {worst:.3f})", worst <= 1.0)


def test_criterion_5b_chain_rule():
    rng = np.random.default_rng(51)
    ok = True
    for _ in range(N_CASES):
        dim = int(rng.integers(1, 3))
        f = random_contraction(rng, dim)
        b = random_generator_poly(rng, dim, 2, degree=1, scale=0.4)
        s = SemicocycleSpec.generated(b, f)
        x = rand_point(rng, dim, 0.25)
        t, u = rng.uniform(0.1, 1.5, 2)
        resid = chain_residual(f, s, x, float(t), float(u))
        growth = np.exp(2 * op_norm(np.asarray(s.b0)) * (t + u))
        ok = ok and resid <= 100 * DEFAULT.ode * max(growth, 1.0)
    report("5b", "chain-rule residual bound", ok)


def test_criterion_5c_gamma0_identity():
    rng = np.random.default_rng(52)
    ok = True
    for _ in range(N_CASES):
        dim = int(rng.integers(1, 3))
        f = random_contraction(rng, dim)
        b = random_generator_poly(rng, dim, 2, degree=1, scale=0.4)
        s = SemicocycleSpec.generated(b, f)
        x = rand_point(rng, dim, 0.2)
        path = evolve(f, s, x, [0.0, 0.5])
        ok = ok and np.array_equal(path.gammas[0], np.eye(2))
    report("5c", "Gamma_0 is the identity", ok)


def test_criterion_5d_gronwall_envelope():
    """||e^{-tB0} Gamma_t(x)|| never beats the exponential of the integrated
    conjugated-generator deviation (beyond 1e-6 relative)."""
    rng = np.random.default_rng(53)
    ok = True
    t_end = 1.5
    ts = np.linspace(0.0, t_end, 33)
    for _ in range(N_CASES):
        f = random_contraction(rng, 1, degree=1)   # linear base flow
        b = random_generator_poly(rng, 1, 2, degree=1, scale=0.4)
        s = SemicocycleSpec.generated(b, f)
        b0 = np.asarray(s.b0)
        x = rand_point(rng, 1)
        g_end = gamma_at(f, s, x, t_end)
        v_norm = op_norm(mat_exp(b0, -t_end) @ g_end)
        states = flow_at(f, x, ts[1:])
        g = np.empty(len(ts))
        for i, t in enumerate(ts):
            state = x if i == 0 else states[i - 1]
            bmat = generator_eval(s, f, state)
            g[i] = op_norm(mat_exp(b0, -t) @ bmat @ mat_exp(b0, t) - b0)
        h = ts[1] - ts[0]
        integral = h / 3.0 * (g[0] + g[-1] + 4 * g[1:-1:2].sum()
                              + 2 * g[2:-1:2].sum())
        ok = ok and v_norm <= np.exp(integral) * (1 + 1e-6)
    report("5d", "limit-variable envelope bound", ok)


def test_criterion_5e_kappa_duality():
    rng = np.random.default_rng(54)
    ok = True
    for _ in range(N_CASES):
        dim = int(rng.integers(1, 7))
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        ok = ok and abs(kappa_minus(a) + kappa_plus(-a)) < 1e-12
    report("5e", "kappa_minus(a) = -kappa_plus(-a)", ok)


def test_criterion_5f_spectral_vs_empirical():
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(N_CASES):
        dim = int(rng.integers(2, 7))
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        a *= 3.0 / max(op_norm(a), 1e-12)
        disc = abs(kappa_plus(a) - kappa_plus(a, method="empirical"))
        worst = max(worst, disc)
    report("5f", f"spectral vs empirical kappa (worst {worst:.2e})",
           worst <= 5e-2)


def test_criterion_5g_small_ratio_always_converges():
    """Spectral width of B0 below |kappa_plus(A)| forces naive convergence."""
    rng = np.random.default_rng(56)
    ok = True
    f = linear_flow(1)
    for _ in range(N_CASES):
        # Eigenvalues within a band of width < 1 = |kappa_plus(A)|.  The band
        # is kept narrow: the limit needs t ~ 21/(1-w) to settle while
        # float64 cancellation in e^{-tB0} Gamma_t grows like e^{wt}, so the
        # Cauchy detector (three consecutive sub-tolerance diffs on a
        # ratio-1.5 schedule) only has room when w is well below ~0.14,
        # even though the limit exists for every w < 1.
        eigs = rng.uniform(-0.05, 0.05, 2) + 1j * rng.uniform(-1.0, 1.0, 2)
        # ill-conditioned eigenbases inflate the same cancellation constant
        while True:
            q = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            if np.linalg.cond(q) <= 10.0:
                break
        b0 = q @ np.diag(eigs) @ np.linalg.inv(q)
        terms = {(0,): b0,
                 (1,): 0.3 * (rng.standard_normal((2, 2))
                              + 1j * rng.standard_normal((2, 2)))}
        s = SemicocycleSpec.generated(
            Polynomial(1, (2, 2), np.zeros(1), terms), f)
        ell = char_ratio(np.asarray(s.b0), np.array([[-1.0 + 0j]]))
        assert ell < 1.0
        x = rand_point(rng, 1)
        res = naive_limit(f, s, [x])
        ok = ok and res.verdict.status == "Converged"
    report("5g", "characteristic ratio < 1 implies naive convergence", ok)


# ---------------------------------------------------------------------------

def test_criterion_6_degradation_study():
    ts = []
    for n in (2, 4, 8, 16):
        sc = builtin("examp123", n)
        t = cauchy_time(sc.semigroup, sc.semicocycle,
                        0.5 * np.ones(n, dtype=complex), tail_tol=1e-6)
        ts.append(t)
    ok = all(t is not None for t in ts)
    ok = ok and all(a < b for a, b in zip(ts, ts[1:]))
    report(6, f"convergence-time degradation T(n) = {ts}", ok)


def test_criterion_7_report_determinism(tmp_path):
    ok = True
    for name in ("examp-uniq", "ex1", "ex-2", "examp123"):
        blobs = []
        for tag, threads in (("a", 1), ("b", 1), ("c", 4)):
            out = tmp_path / f"{name}-{tag}.json"
            proc = subprocess.run(
                [sys.executable, "-m", "semicocycle_lab.cli", "--no-timing",
                 "--threads", str(threads), "--out", str(out),
                 "examples", "run", name],
                capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            blobs.append(out.read_bytes())
        ok = ok and blobs[0] == blobs[1] == blobs[2]
    report(7, "byte-identical reports across runs and thread counts", ok)
