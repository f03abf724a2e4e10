"""Scenario schema, loading/validation, and the built-in example registry.

A scenario bundles a base semigroup, a semicocycle over it, tolerance
overrides, a sampling recipe, and a limit schedule into one JSON document
(schema "semicocycle-lab/1"). Closed-form semicocycles are audited against
the chain rule at load; generated ones carry their generator directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import op_norm
from .dynamics import SemigroupSpec
from .errors import ScenarioError, ToolkitError
from .linearize import Schedule
from .mapexpr import (ExpPolyScalar, Polynomial, array_from_json,
                      array_to_json, mapexpr_from_json, mapexpr_to_json,
                      poly_identity)
from .semicocycle import SemicocycleSpec, chain_residual
from .tolerances import DEFAULT, Tolerances

SCHEMA = "semicocycle-lab/1"


@dataclass(frozen=True)
class SampleSpec:
    radius: float
    count: int = 20
    seed: int = 0


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    semigroup: SemigroupSpec
    semicocycle: SemicocycleSpec
    tolerances: Tolerances = DEFAULT
    sample: SampleSpec = None
    schedule: Schedule = Schedule()
    notes: tuple = ()

    def sample_points(self):
        from .sampling import sample_ball
        sp = self.sample
        pts = sample_ball(self.semigroup.dim, sp.radius, sp.count, sp.seed,
                          self.semigroup.norm)
        return [self.semigroup.x0 + p for p in pts]


# ---------------------------------------------------------------------------
# JSON round trip

def _semigroup_to_json(f: SemigroupSpec) -> dict:
    return {
        "dim": f.dim,
        "norm": f.norm,
        "x0": array_to_json(f.x0),
        "sample_radius": f.sample_radius,
        "generator_f": mapexpr_to_json(f.generator_f),
    }


def _semigroup_from_json(obj: dict) -> SemigroupSpec:
    try:
        x0 = array_from_json(obj["x0"])
        gen = mapexpr_from_json(obj["generator_f"], x0)
        return SemigroupSpec(int(obj["dim"]), obj["norm"], gen, x0,
                             float(obj["sample_radius"]))
    except KeyError as exc:
        raise ScenarioError(f"semigroup block missing field {exc}") from exc


def _inner_to_json(inner) -> dict:
    if isinstance(inner, SemicocycleSpec):
        return {"kind": "semicocycle", "value": _semicocycle_to_json(inner)}
    return {"kind": "matrix", "value": array_to_json(np.asarray(inner))}


def _inner_from_json(obj: dict, center):
    if obj["kind"] == "matrix":
        return array_from_json(obj["value"])
    return _semicocycle_from_json(obj["value"], center)


def _semicocycle_to_json(s: SemicocycleSpec) -> dict:
    if s.variant == "generated":
        return {"variant": "generated", "B": mapexpr_to_json(s.b)}
    return {
        "variant": "closed_form",
        "gamma": {
            "gauge": mapexpr_to_json(s.gauge),
            "inner": _inner_to_json(s.inner),
        },
        "B0": array_to_json(np.asarray(s.b0)),
    }


def _semicocycle_from_json(obj: dict, center) -> SemicocycleSpec:
    variant = obj.get("variant")
    if variant == "generated":
        return SemicocycleSpec.generated(mapexpr_from_json(obj["B"], center),
                                         _FROM_JSON_F.get())
    if variant == "closed_form":
        gamma = obj["gamma"]
        gauge = mapexpr_from_json(gamma["gauge"], center)
        inner = _inner_from_json(gamma["inner"], center)
        return SemicocycleSpec.closed_form(gauge, inner, _FROM_JSON_F.get())
    raise ScenarioError(f"unknown semicocycle variant {variant!r}")


class _FStash:
    """The semicocycle block needs the semigroup to cache B0 at load."""

    def __init__(self):
        self.f = None

    def get(self) -> SemigroupSpec:
        if self.f is None:
            raise ScenarioError("semicocycle block parsed before semigroup")
        return self.f


_FROM_JSON_F = _FStash()


def scenario_to_json(sc: Scenario) -> dict:
    return {
        "schema": SCHEMA,
        "name": sc.name,
        "description": sc.description,
        "semigroup": _semigroup_to_json(sc.semigroup),
        "semicocycle": _semicocycle_to_json(sc.semicocycle),
        "tolerances": {},
        "sample": {"radius": sc.sample.radius, "count": sc.sample.count,
                   "seed": sc.sample.seed},
        "schedule": {"t0": sc.schedule.t0, "ratio": sc.schedule.ratio,
                     "steps": sc.schedule.steps},
        "notes": list(sc.notes),
    }


def scenario_from_json(obj: dict, extra_tols: dict | None = None) -> Scenario:
    if obj.get("schema") != SCHEMA:
        raise ScenarioError(f"unsupported schema {obj.get('schema')!r}, "
                            f"expected {SCHEMA!r}")
    overrides = dict(obj.get("tolerances") or {})
    if extra_tols:
        overrides.update(extra_tols)
    for k, v in overrides.items():
        if not (isinstance(v, (int, float)) and v > 0):
            raise ScenarioError(f"tolerance override {k} must be positive")
    tols = DEFAULT.override(**overrides)

    f = _semigroup_from_json(obj["semigroup"])
    _FROM_JSON_F.f = f
    try:
        s = _semicocycle_from_json(obj["semicocycle"], f.x0)
    except np.linalg.LinAlgError as exc:
        raise ScenarioError(f"semicocycle block rejected: {exc}") from exc
    finally:
        _FROM_JSON_F.f = None

    sample = obj.get("sample") or {}
    sched = obj.get("schedule") or {}
    sc = Scenario(
        name=obj.get("name", "unnamed"),
        description=obj.get("description", ""),
        semigroup=f,
        semicocycle=s,
        tolerances=tols,
        sample=SampleSpec(float(sample.get("radius", f.sample_radius)),
                          int(sample.get("count", 20)),
                          int(sample.get("seed", 0))),
        schedule=Schedule(float(sched.get("t0", 1.0)),
                          float(sched.get("ratio", 1.5)),
                          int(sched.get("steps", 40))),
        notes=tuple(obj.get("notes", ())),
    )
    validate_scenario(sc)
    return sc


def load_scenario(path, extra_tols: dict | None = None) -> Scenario:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_json(obj, extra_tols)


def validate_scenario(sc: Scenario, n_audit: int = 5):
    """Fixed-point, Gamma_0, and (for closed forms) chain-rule audits."""
    tols = sc.tolerances
    sc.semigroup.validate(tols)
    s = sc.semicocycle
    adim = s.algebra_dim
    if s.variant == "closed_form":
        from .semicocycle import gamma_at
        try:
            g0 = gamma_at(sc.semigroup, s, sc.semigroup.x0, 0.0, tols)
        except (ToolkitError, np.linalg.LinAlgError) as exc:
            raise ScenarioError(f"closed form unusable at the fixed point: "
                                f"{exc}") from exc
        if op_norm(g0 - np.eye(adim)) > tols.norm:
            raise ScenarioError("closed form violates Gamma_0 = identity")
        rng = np.random.default_rng(2026)
        r = 0.8 * sc.semigroup.sample_radius
        for _ in range(n_audit):
            x = sc.semigroup.x0 + r * (rng.uniform(-0.5, 0.5, sc.semigroup.dim)
                                       + 1j * rng.uniform(-0.5, 0.5, sc.semigroup.dim))
            t, u = rng.uniform(0.1, 1.5, 2)
            res = chain_residual(sc.semigroup, s, x, float(t), float(u), tols)
            if res > 1e3 * tols.ode:
                raise ScenarioError(
                    f"closed form fails the chain-rule audit: residual "
                    f"{res:.3e} at t={t:.3f}, s={u:.3f}")


# ---------------------------------------------------------------------------
# Built-in examples

def _linear_contraction(dim: int, norm, radius: float,
                        rates=None) -> SemigroupSpec:
    terms = {}
    for k in range(dim):
        alpha = tuple(1 if j == k else 0 for j in range(dim))
        col = np.zeros(dim, dtype=complex)
        col[k] = -1.0 if rates is None else -rates[k]
        terms[alpha] = col
    gen = Polynomial(dim, (dim,), np.zeros(dim), terms)
    return SemigroupSpec(dim, norm, gen, np.zeros(dim), radius)


def _power_sum_gauge(n: int) -> ExpPolyScalar:
    """Scalar gauge exp(sum_k (2 x_k)^k) acting on a 1-dim algebra."""
    terms = {}
    for k in range(n):
        alpha = tuple(k + 1 if j == k else 0 for j in range(n))
        terms[alpha] = np.asarray(2.0 ** (k + 1), dtype=complex)
    p = Polynomial(n, (), np.zeros(n), terms)
    return ExpPolyScalar(p, poly_identity(1, n, np.zeros(n)))


def _build_examp_uniq(n=None) -> Scenario:
    f = _linear_contraction(1, "spectral", 0.6)
    b = Polynomial(1, (2, 2), np.zeros(1),
                   {(0,): np.diag([1.0, 2.0]).astype(complex)})
    s = SemicocycleSpec.generated(b, f)
    return Scenario(
        "examp-uniq",
        "constant generator diag(1,2) over f=-x; linearized by more than "
        "one gauge",
        f, s, sample=SampleSpec(0.6, 9, 7))


def _build_ex1(n=None) -> Scenario:
    f = _linear_contraction(1, "spectral", 0.6)
    gauge = Polynomial(1, (2, 2), np.zeros(1),
                       {(0,): np.eye(2), (1,): [[0.0, 1.0], [1.0, 0.0]]})
    s = SemicocycleSpec.closed_form(gauge, np.diag([3.0, 1.0]).astype(complex), f)
    return Scenario(
        "ex1",
        "gauge [[1,x],[x,1]] around e^{t diag(3,1)}; the plain limit gauge "
        "diverges and degree 2 is resonant",
        f, s, sample=SampleSpec(0.6, 9, 7))


def _build_ex2(n: int = 5) -> Scenario:
    f = _linear_contraction(n, "spectral", 0.4)
    s = SemicocycleSpec.closed_form(_power_sum_gauge(n),
                                    np.zeros((1, 1), dtype=complex), f)
    return Scenario(
        "ex-2",
        f"scalar coboundary exp[sum (2 x_k)^k] over f=-x, truncated to "
        f"n={n} coordinates",
        f, s, sample=SampleSpec(0.4, 20, 11),
        notes=("sequence-space example represented at finite truncation "
               f"n={n} only",))


def _build_examp123(n: int = 5) -> Scenario:
    rates = [1.0 / (k + 1) for k in range(n)]
    f = _linear_contraction(n, "sup", 0.5, rates)
    s = SemicocycleSpec.closed_form(_power_sum_gauge(n),
                                    np.zeros((1, 1), dtype=complex), f)
    return Scenario(
        "examp123",
        f"scalar coboundary over the slowing flow f_k=-x_k/k (sup norm), "
        f"truncated to n={n}; limit convergence degrades with n",
        f, s, sample=SampleSpec(0.5, 20, 11),
        notes=("sequence-space example represented at finite truncation "
               f"n={n} only",))


BUILTINS = {
    "examp-uniq": (_build_examp_uniq, False,
                   "constant diag(1,2) generator; non-unique linearizer"),
    "ex1": (_build_ex1, False,
            "resonant closed form around diag(3,1); needs a corrector"),
    "ex-2": (_build_ex2, True,
             "scalar coboundary over f=-x (truncated sequence space)"),
    "examp123": (_build_examp123, True,
                 "coboundary over a slowing diagonal flow (sup norm)"),
}


def builtin(name: str, n: int | None = None) -> Scenario:
    if name not in BUILTINS:
        raise ScenarioError(
            f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
    build, takes_n, _ = BUILTINS[name]
    sc = build(n if n is not None and takes_n else 5) if takes_n else build()
    validate_scenario(sc)
    return sc


def builtin_names() -> list[tuple[str, str]]:
    return [(k, v[2]) for k, v in BUILTINS.items()]
