"""Scenario descriptions: building fields from JSON specs and running checks.

A subharmonic spec is a list of terms summed pointwise:

    {"type": "log", "at": [x, y], "coef": m, "floor": eps}   m log max(|z - a|, eps)
    {"type": "quad", "coef": a, "at": [x, y]}                a |z - c|^2
    {"type": "const", "value": c}
    {"type": "harmonic", "coeffs": [[re, im], ...]}          Re of a polynomial
    {"type": "holo", "f": {...}}                             log|f|

Test functions are {"family": "green", "pole": [x, y], "scale": s},
{"family": "zero"} or {"family": "minorant", "w": {...}}; obstacles w are
{"family": "constant", "value": b}, {"family": "green", ...} or a term list.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import checker
from .fields import make_delta_sbh
from .green import ModelDomain, default_dtilde, disk_green, extend_green, green_function
from .grid import GridDomain, ScalarField, as_balls
from .testfn import TestFunction, extend_test, greatest_minorant, test_bound
from .zeros import HoloFunction, poincare_lelong

SCHEMA_VERSION = 1

CHECKS = {
    "main": "main inequality for u <= M with a test function v",
    "uniform": "zero sum of f against v bounded by the uniform budget",
    "individual1": "partial zero sums along an exhaustion stay below the budget",
    "individual2": "greatest minorant of w used as test function",
    "proof-chain": "Poisson-Jensen identities and margins for the truncations V_n",
    "poincare-lelong": "Riesz charge of log|f| against its zero divisor",
    "duality": "Jensen measure of the Green function against harmonic measure",
}

DEFAULT_H = 1.0 / 256


class ScenarioError(ValueError):
    """A scenario that cannot be run (bad geometry or failed precondition)."""


def _pt(p) -> complex:
    if p is None:
        return 0j
    if isinstance(p, (list, tuple)):
        return complex(p[0], p[1] if len(p) > 1 else 0.0)
    return complex(p)


def parse_balls(S) -> tuple:
    """S as [[[cx, cy], r], ...]."""
    return as_balls([(_pt(c), float(r)) for c, r in (S or [])])


# --------------------------------------------------------------------------
# term lists


def _term(t: dict) -> Callable:
    kind = t["type"]
    if kind == "log":
        a, m, eps = _pt(t["at"]), float(t.get("coef", 1.0)), float(t.get("floor", 0.0))

        def f(z):
            with np.errstate(divide="ignore"):
                return m * np.log(np.maximum(np.abs(z - a), eps))

    elif kind == "quad":
        c, k = _pt(t.get("at")), float(t["coef"])

        def f(z):
            return k * np.abs(z - c) ** 2

    elif kind == "const":
        c = float(t["value"])

        def f(z):
            return np.full(np.shape(z), c)

    elif kind == "harmonic":
        co = [_pt(c) for c in t["coeffs"]][::-1]

        def f(z):
            return np.real(np.polyval(co, z))

    elif kind == "holo":
        f = HoloFunction.from_json(t["f"]).log_abs
    else:
        raise ScenarioError(f"unknown term type {kind!r}")
    return f


def term_function(terms) -> Callable:
    fs = [_term(t) for t in (terms or [])]

    def f(z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape)
        with np.errstate(invalid="ignore"):
            for g in fs:
                out = out + g(z)
        return out[()] if out.ndim == 0 else out

    return f


def term_field(grid: GridDomain, terms) -> ScalarField:
    return ScalarField.from_function(grid, term_function(terms))


def subharmonic_field(grid: GridDomain, spec) -> ScalarField:
    if spec is None:
        raise ScenarioError("missing subharmonic spec")
    if isinstance(spec, dict) and "f" in spec and "terms" not in spec:
        return HoloFunction.from_json(spec["f"]).field(grid)
    terms = spec["terms"] if isinstance(spec, dict) else spec
    return term_field(grid, terms)


def majorant(grid: GridDomain, spec) -> "checker.MajorantSpec":
    spec = spec or {}
    u1 = term_field(grid, spec.get("u1", []))
    u2 = term_field(grid, spec.get("u2", []))
    try:
        return make_delta_sbh(u1, u2)
    except ValueError as e:
        raise ScenarioError(f"majorant: {e}") from e


def test_field(model: ModelDomain, h: float, S, spec) -> ScalarField:
    grid = model.grid(h, exclusion=S)
    spec = spec or {"family": "zero"}
    fam = spec.get("family", "green")
    if fam == "zero":
        return ScalarField.constant(grid, 0.0)
    if fam == "green":
        q, s = _pt(spec.get("pole")), float(spec.get("scale", 1.0))
        if model.kind == "disk":
            g = disk_green(model.center, model.R, q)
            return ScalarField.from_function(grid, lambda z: s * g(z))
        g = green_function(model, q, h=h, grid=model.grid(h))
        full = extend_green(g, model, target=grid)
        return ScalarField(grid, np.where(grid.region, s * full.values, np.nan))
    if fam == "minorant":
        w = obstacle(model, h, S, spec["w"])
        return greatest_minorant(w)
    raise ScenarioError(f"unknown test family {fam!r}")


def obstacle(model: ModelDomain, h: float, S, spec) -> ScalarField:
    grid = model.grid(h, exclusion=S)
    fam = spec.get("family", "terms")
    if fam == "constant":
        return ScalarField.constant(grid, float(spec["value"]))
    if fam == "green":
        return test_field(model, h, S, spec)
    return term_field(grid, spec["terms"])


# --------------------------------------------------------------------------
# running


@dataclass
class ScenarioResult:
    name: str
    check: str
    verdict: bool
    lhs: float = float("nan")
    rhs: float = float("nan")
    margin: float = float("nan")
    C: float = float("nan")
    Cbar: float = float("nan")
    h: float = float("nan")
    runtime: float = 0.0
    error: str | None = None
    report: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return checker._jsonable(
            {
                "name": self.name,
                "check": self.check,
                "verdict": self.verdict,
                "lhs": self.lhs,
                "rhs": self.rhs,
                "margin": self.margin,
                "C": self.C,
                "Cbar": self.Cbar,
                "h": self.h,
                "error": self.error,
                "config": self.config,
                "report": self.report,
            }
        )


def _from_ineq(res: ScenarioResult, rep) -> None:
    res.lhs, res.rhs, res.margin = rep.lhs, rep.rhs, rep.margin
    res.C = rep.constants.get("C", float("nan"))
    res.Cbar = rep.constants.get("Cbar", float("nan"))
    res.verdict = rep.verdict
    res.report = rep.to_json()


def run_scenario(sc: dict, tolerance: float | None = None, emit_fields: bool = False) -> ScenarioResult:
    """Run one scenario; failures are captured in the result, never raised."""
    name = sc.get("name", "unnamed")
    check = sc.get("check", "main")
    h = float(sc.get("h", DEFAULT_H))
    res = ScenarioResult(name, check, False, h=h, config=dict(sc))
    t0 = time.perf_counter()
    try:
        _dispatch(sc, res, h, tolerance, emit_fields)
    except Exception as e:  # recorded per scenario; the suite goes on
        res.verdict = False
        res.error = f"{type(e).__name__}: {e}"
    res.runtime = time.perf_counter() - t0
    return res


def _dispatch(sc: dict, res: ScenarioResult, h: float, tolerance, emit_fields: bool) -> None:
    check = res.check
    if check not in CHECKS:
        raise ScenarioError(f"unknown check {check!r}")
    model = ModelDomain.from_json(sc.get("domain", {"kind": "disk", "center": [0, 0], "R": 1.0}))
    tol = tolerance if tolerance is not None else sc.get("tolerance")
    S = parse_balls(sc.get("S"))
    x0 = _pt(sc.get("x0"))
    b = sc.get("b")
    Dt = ModelDomain.from_json(sc["dtilde"]) if sc.get("dtilde") else None
    for p in [x0] + [c for c, _ in S]:
        if not model.contains(np.array([p]))[0]:
            raise ScenarioError(f"point {p} lies outside the domain")

    if check == "duality":
        rep = checker.duality_check(model, x0, h, tol=0.02 if tol is None else tol)
        res.verdict, res.report = rep.verdict, rep.to_json()
        res.lhs, res.rhs = rep.tv, rep.tolerance
        res.margin = rep.tolerance - max(rep.tv, rep.weak_error)
        return
    grid = model.grid(h)
    if check == "poincare-lelong":
        f = HoloFunction.from_json(sc["f"])
        pl = poincare_lelong(f, grid)
        t = 0.02 if tol is None else tol
        res.lhs, res.rhs, res.margin = pl.residual, t, t - pl.residual
        res.verdict = pl.residual <= t
        res.report = checker._jsonable({"residual": pl.residual, "recovered": pl.recovered,
                                        "expected": pl.expected, "total": pl.total})
        return
    kw = {} if tol is None else {"tol": tol}
    M = majorant(grid, sc.get("majorant"))
    if check in ("main", "proof-chain"):
        u = subharmonic_field(grid, sc.get("u"))
        v = test_field(model, h, S, sc.get("test"))
        if emit_fields:
            res.fields.update(u=u, M=M.M, v=v)
        if check == "main":
            _from_ineq(res, checker.verify_main(u, M, v, S, x0, Dt, b, **kw))
            return
        bb = test_bound(v, S) if b is None else float(b)
        if bb <= 0:
            bb = 1.0
        Dt = Dt if Dt is not None else default_dtilde(S, x0, h)
        Vt, ct = extend_test(v, S, x0, Dt, bb, D=model)
        if emit_fields:
            res.fields["Vtilde"] = Vt
        ch = checker.proof_chain_check(u, M, Vt, x0, sc.get("n_list", (4, 16, 64)), **kw)
        res.verdict = ch.verdict
        res.report = ch.to_json()
        res.report["c_tilde"] = ct
        res.lhs, res.rhs = float(max(max(r) for r in ch.residuals)), ch.tolerance
        res.margin = float(min(ch.margins))
        return
    f = HoloFunction.from_json(sc["f"])
    if check == "uniform":
        v = test_field(model, h, S, sc.get("test"))
        sweep = [test_field(model, h, S, s) for s in sc.get("sweep", [])]
        _from_ineq(res, checker.verify_uniform(f, M, v, S, x0, b, Dt, sweep=sweep, **kw))
    elif check == "individual1":
        ladder = [parse_balls(s) for s in sc["exhaustion"]]
        v = test_field(model, h, ladder[-1], sc.get("test"))
        w = obstacle(model, h, ladder[-1], sc["w"]) if sc.get("w") else None
        rep = checker.verify_individual_1(f, M, w, v, ladder, x0, b, Dt, **kw)
        res.verdict = rep.verdict
        res.report = rep.to_json()
        res.lhs, res.rhs = max(rep.partial_sums), rep.budget
        res.margin = rep.budget - max(rep.partial_sums)
        res.C = rep.reports[-1].constants["C"]
        res.Cbar = rep.reports[-1].constants["Cbar"]
    elif check == "individual2":
        w = obstacle(model, h, S, sc["w"])
        _from_ineq(res, checker.verify_individual_2(f, M, w, S, x0, b, sc.get("key", "i"), Dt, **kw))


# --------------------------------------------------------------------------
# randomized suite


def random_scenario(rng: np.random.Generator, index: int, h: float = DEFAULT_H) -> dict:
    """A disk scenario u = log|P| <= M with a Green-family test function.

    M = log c + sum log max(|z - a_k|, eps) + alpha |z|^2
        + beta (log 2 - log max(|z - p|, eps2)),
    which dominates log|P| on the unit disk since |z - p| < 2 there.
    """

    def in_annulus(lo, hi):
        r = math.sqrt(rng.uniform(lo * lo, hi * hi))
        th = rng.uniform(0, 2 * math.pi)
        return [r * math.cos(th), r * math.sin(th)]

    k = int(rng.integers(1, 5))
    roots = []
    while len(roots) < k:
        a = in_annulus(0.1, 0.85)
        if all(math.dist(a, b) >= 10 * h for b in roots):
            roots.append(a)
    rS = float(rng.uniform(0.3, 0.5))
    eps = float(rng.uniform(0.05, 0.1))
    alpha = float(rng.uniform(0.0, 0.3))
    beta = float(rng.uniform(0.0, 0.5))
    c = float(rng.uniform(1.0, 2.0))
    p = in_annulus(0.2, 0.8)
    eps2 = float(rng.uniform(0.05, 0.1))
    q = in_annulus(0.0, 0.6 * rS)
    s = float(rng.uniform(0.5, 2.0))
    u1 = [{"type": "const", "value": math.log(c) + beta * math.log(2)}]
    u1 += [{"type": "log", "at": a, "coef": 1.0, "floor": eps} for a in roots]
    u1 += [{"type": "quad", "coef": alpha}]
    u2 = [{"type": "log", "at": p, "coef": beta, "floor": eps2}]
    return {
        "name": f"random-{index:02d}",
        "check": "main",
        "h": h,
        "domain": {"kind": "disk", "center": [0, 0], "R": 1.0},
        "S": [[[0, 0], rS]],
        "x0": [0, 0],
        "dtilde": {"kind": "disk", "center": [0, 0], "R": 0.5 * (1.0 + rS)},
        "u": {"terms": [{"type": "log", "at": a, "coef": 1.0} for a in roots]},
        "majorant": {"u1": u1, "u2": u2},
        "test": {"family": "green", "pole": q, "scale": s},
    }


def random_suite(seed: int = 0, count: int = 20, h: float = DEFAULT_H) -> list:
    rng = np.random.default_rng(seed)
    return [random_scenario(rng, i, h) for i in range(count)]
