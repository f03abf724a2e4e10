"""Benchmark the compiled evolve_poly kernel against the pure-numpy fallback.

Integrates the coupled system u' = f(u), V' = B(u) V for a 5-dimensional
cubic contraction with a 4x4 matrix cocycle factor, out to t = 10 with 200
output times, and reports wall-clock medians for both implementations plus
their agreement.  Run with:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import statistics
import time

import numpy as np

from semicocycle_lab._kernels import _poly_py
from semicocycle_lab.mapexpr import Polynomial

try:
    from semicocycle_lab._kernels import _poly_cy
except ImportError:
    _poly_cy = None


def build_problem(dim=5, adim=4, seed=0):
    rng = np.random.default_rng(seed)
    f_terms = {}
    for k in range(dim):
        alpha = tuple(1 if j == k else 0 for j in range(dim))
        col = np.zeros(dim, dtype=complex)
        col[k] = -(1.0 + 0.1 * k)
        f_terms[alpha] = col
    for _ in range(dim):
        alpha = tuple(int(v) for v in rng.multinomial(3, np.ones(dim) / dim))
        f_terms[alpha] = 0.1 * (rng.standard_normal(dim)
                                + 1j * rng.standard_normal(dim))
    f = Polynomial(dim, (dim,), np.zeros(dim), f_terms)

    b_terms = {(0,) * dim: rng.standard_normal((adim, adim))
               + 1j * rng.standard_normal((adim, adim))}
    for k in range(dim):
        alpha = tuple(1 if j == k else 0 for j in range(dim))
        b_terms[alpha] = 0.3 * (rng.standard_normal((adim, adim))
                                + 1j * rng.standard_normal((adim, adim)))
    b = Polynomial(dim, (adim, adim), np.zeros(dim), b_terms)

    x0 = 0.3 * rng.standard_normal(dim).astype(complex)
    y0 = np.concatenate([x0, np.eye(adim, dtype=complex).ravel()])
    t_out = np.linspace(0.05, 10.0, 200)
    return f, b, y0, t_out


def run_once(impl, f, b, y0, t_out):
    fexps, fcoefs = f.packed()
    bexps, bcoefs = b.packed()
    t0 = time.perf_counter()
    Y, status, t_stop = impl.evolve_poly(
        fexps, fcoefs, bexps, bcoefs, np.zeros(f.input_dim), y0, t_out,
        1e-10, 1e-10, 0, np.inf)
    elapsed = time.perf_counter() - t0
    assert status == _poly_py.OK, f"integration failed: status {status}"
    return elapsed, Y


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    f, b, y0, t_out = build_problem()
    impls = [("pure-python", _poly_py)]
    if _poly_cy is not None:
        impls.insert(0, ("compiled", _poly_cy))
    else:
        print("compiled kernel not available; benchmarking fallback only")

    results = {}
    for name, impl in impls:
        run_once(impl, f, b, y0, t_out)  # warm-up
        times, Y = [], None
        for _ in range(args.repeats):
            dt, Y = run_once(impl, f, b, y0, t_out)
            times.append(dt)
        results[name] = (statistics.median(times), Y)
        print(f"{name:12s} median {results[name][0] * 1e3:8.2f} ms "
              f"over {args.repeats} runs")

    if len(results) == 2:
        yc, yp = results["compiled"][1], results["pure-python"][1]
        diff = float(np.max(np.abs(yc - yp) / np.maximum(1.0, np.abs(yp))))
        speedup = results["pure-python"][0] / results["compiled"][0]
        print(f"speedup      {speedup:8.2f}x")
        print(f"max rel diff {diff:8.2e}")


if __name__ == "__main__":
    main()
