"""Command-line front end.

Commands operate on scenario JSON files or builtin example names:

    semicocycle-lab examples list
    semicocycle-lab examples run ex1 --method auto
    semicocycle-lab indices ex-2 --n 3
    semicocycle-lab linearize scenario.json --method corrected --degree 2
    semicocycle-lab verify ex1 --gauge gauge.json
    semicocycle-lab simulate examp123 --x 0.5,0.5 --t-max 20 --dt-out 0.5

Exit codes: 0 for a converged/passing run, 2 for diverged/undecided/failed
verdicts, 1 for errors. Tolerances are overridable per name with
"--tol.NAME VALUE" anywhere on the line.
"""

from __future__ import annotations

import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from . import __version__
from .algebra import op_norm
from .dynamics import flow_at, linear_part
from .errors import NotScalarLinearPart, ResonantSylvester, ToolkitError
from .linearize import (ConvergenceVerdict, Schedule, coboundary_check,
                        corrected_limit, corrector_fit, integral_criterion,
                        naive_limit, taylor_linearize, verify_cohomology)
from .mapexpr import array_to_json, mapexpr_from_json, mapexpr_to_json
from .scenarios import (Scenario, builtin, builtin_names, load_scenario,
                        scenario_to_json)
from .semicocycle import evolve, growth_fit
from .spectra import char_ratio, kappa_minus, kappa_plus, resonance, scalar_omega
from .tolerances import DEFAULT
from .errors import ZeroDenominator

_STATUS_RANK = {"Converged": 0, "Undecided": 1, "Oscillating": 2, "Diverged": 3}


def _extract_tol_overrides(argv):
    """Pull --tol.NAME VALUE pairs out of argv before click parsing."""
    out, overrides = [], {}
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--tol."):
            name = arg[len("--tol."):]
            if "=" in name:
                name, value = name.split("=", 1)
            else:
                i += 1
                if i >= len(argv):
                    raise click.UsageError(f"--tol.{name} needs a value")
                value = argv[i]
            try:
                overrides[name] = float(value)
            except ValueError:
                raise click.UsageError(f"--tol.{name}: bad float {value!r}")
        else:
            out.append(arg)
        i += 1
    return out, overrides


def _fmt(x) -> float:
    return float(x)


def _emit(obj, out_path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _load(scenario_arg, n, tol_overrides):
    from .scenarios import BUILTINS
    if scenario_arg in BUILTINS:
        sc = builtin(scenario_arg, n)
        if tol_overrides:
            sc = Scenario(sc.name, sc.description, sc.semigroup,
                          sc.semicocycle, sc.tolerances.override(**tol_overrides),
                          sc.sample, sc.schedule, sc.notes)
        return sc
    return load_scenario(scenario_arg, tol_overrides)


def _spectra_block(sc: Scenario):
    tols = sc.tolerances
    b0 = sc.semicocycle.b0
    a = linear_part(sc.semigroup, tols)
    kp = kappa_plus(b0, tols=tols)
    km = kappa_minus(b0, tols=tols)
    try:
        ell = char_ratio(b0, a, tols)
    except ZeroDenominator:
        ell = None
    block = {"kappa_plus": _fmt(kp), "kappa_minus": _fmt(km), "ell": ell,
             "omega": None, "resonant_k": None, "k_max_tested": None}
    try:
        omega = scalar_omega(a, tols=tols)
    except NotScalarLinearPart:
        return block
    rep = resonance(b0, omega, tols=tols)
    block.update(omega=_fmt(omega), resonant_k=rep.resonant_k,
                 k_max_tested=rep.k_max_tested)
    return block


def _verdict_json(v: ConvergenceVerdict):
    return {"status": v.status, "t_reached": _fmt(v.t_reached),
            "cauchy_tail": _fmt(v.cauchy_tail) if math.isfinite(v.cauchy_tail)
            else None,
            "witness": _fmt(v.witness) if v.witness is not None else None}


def _merge_limit_results(results, method, b0):
    """Combine per-sample limit runs into one result-shaped summary."""
    from .linearize import LinearizationResult
    worst = ConvergenceVerdict("Converged", 0.0, 0.0)
    m_samples = {}
    for r in results:
        v = r.verdict
        if (_STATUS_RANK[v.status] > _STATUS_RANK[worst.status]
                or (v.status == worst.status
                    and v.cauchy_tail > worst.cauchy_tail)):
            worst = v
        if v.status == "Converged":
            m_samples.update(r.m_samples)
        if v.status == "Converged" and worst.status == "Converged":
            worst = ConvergenceVerdict(
                "Converged", max(worst.t_reached, v.t_reached),
                max(worst.cauchy_tail, v.cauchy_tail))
    if worst.status != "Converged":
        m_samples = {}
    return LinearizationResult(method, b0, worst, m_samples,
                               corrector=results[0].corrector if results else None)


def _run_limit(sc: Scenario, method, corrector_n, samples, threads):
    f, s = sc.semigroup, sc.semicocycle

    def one(x):
        if corrector_n is None:
            return naive_limit(f, s, [x], sc.schedule, sc.tolerances)
        return corrected_limit(f, s, corrector_n, [x], sc.schedule,
                               sc.tolerances)

    if threads <= 1 or len(samples) <= 1:
        results = [one(x) for x in samples]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, samples))   # ordered assembly
    return _merge_limit_results(results, method, s.b0)


def _samples_json(m_samples):
    out = []
    for x, m in m_samples.items():
        out.append({"x": array_to_json(np.array(x)),
                    "M": array_to_json(np.asarray(m))})
    return out


def _linearize_pipeline(sc: Scenario, method, degree, threads):
    f, s = sc.semigroup, sc.semicocycle
    tols = sc.tolerances
    samples = sc.sample_points()
    spectra = _spectra_block(sc)
    checks = []
    block = {"method": method, "B0": array_to_json(np.asarray(s.b0)),
             "ell": spectra["ell"], "resonant_k": spectra["resonant_k"]}

    cobound = op_norm(s.b0) <= tols.norm
    result = None
    chosen = method
    if method in ("naive", "auto"):
        result = _run_limit(sc, "naive", None, samples, threads)
        chosen = "naive"
    if method in ("corrected", "auto") and (
            result is None or result.verdict.status != "Converged"):
        cap = degree
        if cap is None:
            cap = max(int(math.floor(spectra["ell"])), 1) \
                if spectra["ell"] is not None else 1
        try:
            corr = corrector_fit(f, s, cap, samples, tols=tols)
            result = _run_limit(sc, "corrected", corr.n, samples, threads)
            chosen = "corrected"
            block["corrector"] = {
                "degree": corr.degree,
                "null_dim": corr.null_dim,
                "coeffs": mapexpr_to_json(corr.n),
            }
        except ToolkitError as exc:
            if method == "corrected":
                raise
            checks.append({"check": "corrector_fit", "pass": False,
                           "detail": str(exc)})
    if method == "taylor" or (method == "auto" and (
            result is None or result.verdict.status != "Converged")):
        deg = degree if degree is not None else 3
        try:
            result = taylor_linearize(f, s, deg, samples, tols=tols)
            chosen = "taylor"
            block["M_fit"] = mapexpr_to_json(result.m_fit)
        except (ResonantSylvester, NotScalarLinearPart, ToolkitError):
            if method == "taylor":
                raise
    if result is None:
        raise ToolkitError(f"method {method!r} produced no result")

    block["method"] = chosen
    block["verdict"] = _verdict_json(result.verdict)
    block["samples"] = _samples_json(result.m_samples)

    residual = result.cohomology_residual
    if residual is None and result.verdict.status == "Converged" \
            and chosen != "taylor":
        # spot-check the converged limit against the cohomology identity:
        # re-run the limit at pushed-forward points M(F_t(x)) and compare
        residual = _limit_cohomology_residual(sc, result, threads)
    block["cohomology_residual"] = _fmt(residual) if residual is not None else None

    try:
        ic = integral_criterion(f, s, samples[0], tols=tols)
        block["integral_L"] = _fmt(ic.value) if ic.kind == "finite" else None
        checks.append({"check": "integral_criterion", "pass": ic.kind != "divergent",
                       "detail": ic.kind})
    except ToolkitError as exc:
        checks.append({"check": "integral_criterion", "pass": False,
                       "detail": str(exc)})
    block["coboundary"] = bool(cobound
                               and result.verdict.status == "Converged")
    checks.append({"check": "verdict",
                   "pass": result.verdict.status == "Converged",
                   "detail": result.verdict.status})
    return spectra, block, checks, result


def _limit_cohomology_residual(sc: Scenario, result, threads):
    """Residual of M(F_t(x)) Gamma_t(x) = e^{tB0} M(x) with M from the limit."""
    from .algebra import mat_exp
    from .semicocycle import evolve_partial
    f, s = sc.semigroup, sc.semicocycle
    tols = sc.tolerances
    worst = 0.0
    t_probe = [0.5, 1.0]
    for key, m_here in list(result.m_samples.items())[:6]:
        x = np.array(key)
        path, status, _ = evolve_partial(f, s, x, t_probe, tols)
        if status != 0:
            continue
        for i, t in enumerate(t_probe):
            push = _run_limit(sc, result.method, None if result.corrector is None
                              else result.corrector.n,
                              [path.flow_states[i]], 1)
            if push.verdict.status != "Converged":
                return math.inf
            m_push = next(iter(push.m_samples.values()))
            e = mat_exp(s.b0, t, tols=tols)
            worst = max(worst, op_norm(m_push @ path.gammas[i] - e @ m_here)
                        / (1.0 + op_norm(e)))
    return worst


def _complex_csv(v: complex) -> list[str]:
    return [f"{v.real:.17g}", f"{v.imag:.17g}"]


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


# ---------------------------------------------------------------------------

class _Ctx:
    def __init__(self, out, seed, threads, no_timing, tol_overrides):
        self.out = out
        self.seed = seed
        self.threads = threads
        self.no_timing = no_timing
        self.tol_overrides = tol_overrides


@click.group()
@click.option("--out", type=click.Path(), default=None,
              help="write the report/CSV here instead of stdout")
@click.option("--seed", type=int, default=None, help="sampling seed override")
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--no-timing", is_flag=True,
              help="omit timing fields (for byte-identical reports)")
@click.pass_context
def main(ctx, out, seed, threads, no_timing):
    """Linearization toolkit for holomorphic semicocycles."""
    ctx.obj = _Ctx(out, seed, threads, no_timing,
                   getattr(main, "_tol_overrides", {}))


def _apply_seed(sc: Scenario, seed):
    if seed is None:
        return sc
    from .scenarios import SampleSpec
    sp = SampleSpec(sc.sample.radius, sc.sample.count, seed)
    return Scenario(sc.name, sc.description, sc.semigroup, sc.semicocycle,
                    sc.tolerances, sp, sc.schedule, sc.notes)


def _report_shell(sc: Scenario, ctx: _Ctx, t0: float):
    rep = {"schema": "semicocycle-lab/report/1",
           "scenario": sc.name,
           "version": __version__,
           "seed": sc.sample.seed,
           "notes": list(sc.notes)}
    if not ctx.no_timing:
        rep["timing_s"] = round(time.monotonic() - t0, 3)
    return rep


@main.group()
def examples():
    """List or run the built-in examples."""


@examples.command("list")
@click.pass_obj
def examples_list(ctx):
    for name, desc in builtin_names():
        click.echo(f"{name:12s} {desc}")


@examples.command("run")
@click.argument("name")
@click.option("--n", type=int, default=None,
              help="truncation dimension for sequence-space builtins")
@click.option("--method", type=click.Choice(["naive", "corrected", "taylor",
                                             "auto"]), default="auto",
              show_default=True)
@click.option("--degree", type=int, default=None)
@click.pass_obj
def examples_run(ctx, name, n, method, degree):
    _cmd_linearize_impl(ctx, name, n, method, degree, include_scenario=True)


@main.command()
@click.argument("scenario")
@click.option("--n", type=int, default=None)
@click.pass_obj
def indices(ctx, scenario, n):
    """Lyapunov indices, characteristic ratio, and resonance report."""
    t0 = time.monotonic()
    sc = _apply_seed(_load(scenario, n, ctx.tol_overrides), ctx.seed)
    rep = _report_shell(sc, ctx, t0)
    rep["spectra"] = _spectra_block(sc)
    _emit(rep, ctx.out)


@main.command()
@click.argument("scenario")
@click.option("--n", type=int, default=None)
@click.option("--method", type=click.Choice(["naive", "corrected", "taylor",
                                             "auto"]), default="auto",
              show_default=True)
@click.option("--degree", type=int, default=None)
@click.pass_obj
def linearize(ctx, scenario, n, method, degree):
    """Run a linearization method (or the auto cascade) on a scenario."""
    _cmd_linearize_impl(ctx, scenario, n, method, degree)


def _cmd_linearize_impl(ctx, scenario, n, method, degree,
                        include_scenario=False):
    t0 = time.monotonic()
    sc = _apply_seed(_load(scenario, n, ctx.tol_overrides), ctx.seed)
    spectra, block, checks, result = _linearize_pipeline(
        sc, method, degree, ctx.threads)
    rep = _report_shell(sc, ctx, t0)
    rep["spectra"] = spectra
    rep["linearization"] = block
    rep["checks"] = checks
    if include_scenario:
        rep["scenario_json"] = scenario_to_json(sc)
    if not ctx.no_timing:
        rep["timing_s"] = round(time.monotonic() - t0, 3)
    _emit(rep, ctx.out)
    if result.verdict.status != "Converged":
        sys.exit(2)


@main.command()
@click.argument("scenario")
@click.option("--n", type=int, default=None)
@click.option("--gauge", "gauge_path", type=click.Path(exists=True),
              required=True, help="MapExpr JSON file for the gauge M")
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.pass_obj
def verify(ctx, scenario, n, gauge_path, tol):
    """Check M(F_t(x)) Gamma_t(x) = e^{tB0} M(x) for a supplied gauge."""
    t0 = time.monotonic()
    sc = _apply_seed(_load(scenario, n, ctx.tol_overrides), ctx.seed)
    with open(gauge_path) as fh:
        gauge = mapexpr_from_json(json.load(fh), sc.semigroup.x0)
    samples = sc.sample_points()
    residual = verify_cohomology(sc.semigroup, sc.semicocycle, gauge,
                                 sc.semicocycle.b0, samples,
                                 tols=sc.tolerances)
    rep = _report_shell(sc, ctx, t0)
    rep["verify"] = {"residual": _fmt(residual), "tol": tol,
                     "pass": bool(residual <= tol)}
    _emit(rep, ctx.out)
    if residual > tol:
        sys.exit(2)


@main.command()
@click.argument("scenario")
@click.option("--n", type=int, default=None)
@click.option("--x", "x_str", default=None,
              help="comma-separated start point, e.g. 0.5,0.3+0.1j")
@click.option("--t-max", type=float, default=10.0, show_default=True)
@click.option("--dt-out", type=float, default=0.25, show_default=True)
@click.pass_obj
def simulate(ctx, scenario, n, x_str, t_max, dt_out):
    """Evolve flow + semicocycle and write trajectory/cocycle CSVs."""
    t0 = time.monotonic()
    sc = _apply_seed(_load(scenario, n, ctx.tol_overrides), ctx.seed)
    f, s = sc.semigroup, sc.semicocycle
    if x_str is None:
        x = sc.sample_points()[0]
    else:
        x = np.array([complex(p.strip()) for p in x_str.split(",")],
                     dtype=complex)
        if x.shape != (f.dim,):
            raise click.UsageError(f"--x needs {f.dim} components")
    times = np.arange(dt_out, t_max + dt_out / 2, dt_out)
    path = evolve(f, s, x, times, sc.tolerances)

    prefix = ctx.out or f"{sc.name}"
    adim = s.algebra_dim
    traj_rows, coc_rows = [], []
    for i, t in enumerate(times):
        row = [f"{t:.17g}"]
        for v in path.flow_states[i]:
            row += _complex_csv(v)
        traj_rows.append(row)
        row = [f"{t:.17g}"]
        for v in path.gammas[i].ravel():
            row += _complex_csv(v)
        coc_rows.append(row)
    thead = ["t"]
    for k in range(f.dim):
        thead += [f"re_x{k}", f"im_x{k}"]
    chead = ["t"]
    for i in range(adim):
        for j in range(adim):
            chead += [f"re_g{i}{j}", f"im_g{i}{j}"]
    _write_csv(f"{prefix}.trajectory.csv", thead, traj_rows)
    _write_csv(f"{prefix}.cocycle.csv", chead, coc_rows)
    c, li = growth_fit([path], f.norm)
    summary = _report_shell(sc, ctx, t0)
    summary["growth_fit"] = {"C": _fmt(c), "L": _fmt(li)}
    summary["files"] = [f"{prefix}.trajectory.csv", f"{prefix}.cocycle.csv"]
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


def entry(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    argv, overrides = _extract_tol_overrides(argv)
    main._tol_overrides = overrides
    try:
        return main(args=argv, standalone_mode=True)
    except ToolkitError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entry()
