"""Numerical verification of the main inequality and its corollaries.

All integrals are taken against Riesz charges extracted from grid fields;
only discretization slack is forgiven, in proportion to the size of the
two sides.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .fields import MajorantSpec, RieszCharge, check_subharmonic, riesz_measure
from .green import ModelDomain, default_dtilde
from .grid import GridDomain, ScalarField, _on, as_balls, in_balls
from .jensen import duality_inverse, estimate_normalization, poisson_jensen_residual
from .testfn import (
    TestFunction,
    _with_S,
    boundary_inf,
    classify_test,
    greatest_minorant,
    green_field,
    test_bound,
    truncate_sequence,
)
from .zeros import HoloFunction, ZeroDivisor, weighted_zero_sum

DEFAULT_TOL = 1e-3


class MajorantViolation(ValueError):
    """u <= M (or |f| <= exp M) fails; ``witnesses`` are grid cells."""

    def __init__(self, witnesses, what: str = "u <= M"):
        super().__init__(f"{what} fails at {len(witnesses)} cells, e.g. {witnesses[:5]}")
        self.witnesses = witnesses


@dataclass
class InequalityReport:
    check: str
    lhs: float
    rhs: float
    margin: float
    verdict: bool
    constants: dict
    components: dict
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def build(cls, check, lhs, rhs, constants, components, tol, diagnostics=None):
        margin = rhs - lhs if not (math.isinf(lhs) and math.isinf(rhs) and lhs == rhs) else 0.0
        scale = _scale(lhs, rhs)
        diag = dict(diagnostics or {})
        diag.update(tolerance=tol, scale=scale)
        return cls(check, lhs, rhs, margin, bool(margin >= -tol * scale), constants, components, diag)

    def to_json(self) -> dict:
        return _jsonable(asdict(self))


def _scale(lhs: float, rhs: float) -> float:
    vals = [1.0] + [abs(x) for x in (lhs, rhs) if math.isfinite(x)]
    return max(vals)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# --------------------------------------------------------------------------
# constants


def main_constant(S, x0, Dtilde: ModelDomain, b: float, h: float = 1.0 / 256) -> float:
    """C = b / inf over the boundary of S of g_Dtilde(., x0)."""
    if b <= 0:
        raise ValueError("b must be positive")
    balls = as_balls(S)
    if not in_balls(np.array([complex(x0)]), [(c, r * (1 - 1e-12)) for c, r in balls])[0]:
        raise ValueError("x0 must lie in the interior of S")
    edge = np.concatenate([c + r * np.exp(2j * np.pi * np.arange(64) / 64) for c, r in balls])
    if not np.all(Dtilde.contains(edge)) or min(Dtilde.inner_distance(z) for z in edge) <= 0:
        raise ValueError("S must be compactly contained in Dtilde")
    g = green_field(Dtilde, x0, h)
    a = boundary_inf(g, balls)
    if not a > 0:
        raise ValueError("Green function does not stay positive on the boundary of S")
    return b / a


def cbar_components(x0, S, Dtilde: ModelDomain, M: MajorantSpec, h: float | None = None) -> dict:
    """Terms of C-bar: the Green integral of nu_M off x0, the Green integral
    of nu_M^- off S and M^+(x0)."""
    x0 = complex(x0)
    dom = M.charge.domain
    h = dom.h if h is None else h
    mx0 = M.value(x0)
    if mx0 == np.inf:
        return {"green_nu": float("nan"), "green_minus": float("nan"), "m_plus": math.inf, "infinite": True}
    if not M.in_dom(x0):
        raise ValueError("x0 is not in dom M")
    g = green_field(Dtilde, x0, h, target=dom.full())
    balls = as_balls(S)
    inside = lambda z: Dtilde.contains(z)
    nu = M.charge.without_atoms_near(x0, 0.5 * dom.h).restrict(inside)
    t1 = nu.integrate(g)
    neg = M.negative.restrict(lambda z: inside(z) & ~in_balls(z, balls))
    t2 = neg.integrate(g)
    t3 = max(mx0, 0.0)
    return {"green_nu": float(t1), "green_minus": float(t2), "m_plus": float(t3), "infinite": False}


def cbar_constant(x0, S, Dtilde: ModelDomain, M: MajorantSpec, h: float | None = None) -> float:
    """C-bar_M, +inf when M(x0) = +inf."""
    c = cbar_components(x0, S, Dtilde, M, h)
    if c["infinite"]:
        return math.inf
    return c["green_nu"] + c["green_minus"] + c["m_plus"]


# --------------------------------------------------------------------------
# helpers


def _field_of(v) -> ScalarField:
    return v.field if isinstance(v, TestFunction) else v


def _outside(balls):
    return lambda z: ~in_balls(z, balls) if balls else np.ones(np.shape(z), bool)


def check_below(u: ScalarField, M: ScalarField, tol: float = 1e-9, what: str = "u <= M") -> None:
    """Raise MajorantViolation at cells where u > M."""
    mv = _on(M, u.domain)
    uv = u.values
    with np.errstate(invalid="ignore"):
        bad = u.domain.region & ~np.isnan(mv) & (uv > mv + tol * np.maximum(1.0, np.abs(np.nan_to_num(mv, posinf=0, neginf=0))))
    if bad.any():
        raise MajorantViolation([tuple(int(t) for t in p) for p in np.argwhere(bad)], what)


def _majorant_terms(M: MajorantSpec, vf: ScalarField, balls, Dtilde: ModelDomain) -> tuple:
    out = _outside(balls)
    I_M = M.charge.restrict(out).integrate(vf)
    I_minus = M.negative.restrict(lambda z: out(z) & Dtilde.contains(z)).integrate(vf)
    return float(I_M), float(I_minus)


def _resolve(S, x0, Dtilde, b, vf, h):
    balls = as_balls(S)
    Dt = Dtilde if Dtilde is not None else default_dtilde(balls, x0, h)
    bb = test_bound(vf, balls) if b is None else float(b)
    return balls, Dt, bb


# --------------------------------------------------------------------------
# main inequality


def verify_main(
    u: ScalarField,
    M: MajorantSpec,
    v,
    S,
    x0,
    Dtilde: ModelDomain | None = None,
    b: float | None = None,
    tol: float = DEFAULT_TOL,
) -> InequalityReport:
    """C u(x0) + int_{D-S} v dnu_u <= int_{D-S} v dnu_M + int_{Dt-S} v dnu_M^- + C Cbar."""
    x0 = complex(x0)
    vf = _field_of(v)
    h = u.domain.h
    balls, Dt, bb = _resolve(S, x0, Dtilde, b, vf, h)
    check_below(u, M.M)
    bad = check_subharmonic(u)
    if bad:
        raise ValueError(f"u is not subharmonic at {len(bad)} cells, e.g. {bad[:5]}")
    cls = classify_test(vf, balls, bb)
    if not cls.member:
        raise ValueError(f"v is not a test function: clause {cls.failing} fails")
    C = main_constant(balls, x0, Dt, bb, h)
    cb = cbar_components(x0, balls, Dt, M)
    Cbar = math.inf if cb["infinite"] else cb["green_nu"] + cb["green_minus"] + cb["m_plus"]
    nu_u = riesz_measure(u)
    ux0 = float(u(x0))
    I_u = float(nu_u.restrict(_outside(balls)).integrate(vf))
    I_M, I_minus = _majorant_terms(M, vf, balls, Dt)
    lhs = C * ux0 + I_u if ux0 > -math.inf else -math.inf
    rhs = I_M + I_minus + C * Cbar
    comps = {"u_x0": ux0, "int_v_nu_u": I_u, "int_v_nu_M": I_M, "int_v_nu_M_minus": I_minus, "cbar_terms": cb}
    consts = {"C": C, "c_tilde": 1.0 / C, "Cbar": Cbar, "b": bb}
    diag = {"h": h, "Dtilde": Dt.to_json(), "v_sup": cls.sup}
    return InequalityReport.build("main", lhs, rhs, consts, comps, tol, diag)


def _divisor_in(d: ZeroDivisor, dom: GridDomain) -> ZeroDivisor:
    keep = []
    for p, m in d.entries:
        i, j = dom.index(p)
        if dom.in_bounds(i, j) and dom.region[i, j] and dom.covers(np.array([p]))[0]:
            keep.append((p, m))
    return ZeroDivisor.from_pairs(keep)


def verify_uniform(
    f: HoloFunction,
    M: MajorantSpec,
    v,
    S,
    z0,
    b: float | None = None,
    Dtilde: ModelDomain | None = None,
    tol: float = DEFAULT_TOL,
    divisor: ZeroDivisor | None = None,
    sweep: Sequence = (),
) -> InequalityReport:
    """sum of v over the zeros of f off S <= int v dnu_M + int v dnu_M^- - C log|f(z0)| + C Cbar.

    ``divisor`` replaces the zero divisor of f by a subdivisor; ``sweep``
    lists further test functions checked with the same constants.
    """
    z0 = complex(z0)
    vf = _field_of(v)
    grid = M.domain
    h = grid.h
    balls, Dt, bb = _resolve(S, z0, Dtilde, b, vf, h)
    logf = f.field(grid)
    check_below(logf, M.M, what="|f| <= exp M")
    lf0 = float(f.log_abs(z0))
    if not math.isfinite(lf0):
        raise ValueError("f(z0) must not vanish")
    if not math.isfinite(M.value(z0)) and M.value(z0) < 0:
        raise ValueError("M(z0) must not be -inf")
    Z = f.divisor if divisor is None else divisor
    if divisor is not None and not divisor <= f.divisor:
        raise ValueError("divisor is not a subdivisor of the zeros of f")
    Z = _divisor_in(Z, grid)
    C = main_constant(balls, z0, Dt, bb, h)
    cb = cbar_components(z0, balls, Dt, M)
    Cbar = math.inf if cb["infinite"] else cb["green_nu"] + cb["green_minus"] + cb["m_plus"]

    def sides(fld):
        lhs = weighted_zero_sum(Z, fld, balls, method="exact")
        I_M, I_minus = _majorant_terms(M, fld, balls, Dt)
        return lhs, I_M + I_minus - C * lf0 + C * Cbar, I_M, I_minus

    lhs, rhs, I_M, I_minus = sides(vf)
    sweep_out = []
    for w in sweep:
        wf = _field_of(w)
        s = test_bound(wf, balls)
        if s > bb * (1 + 1e-9):
            raise ValueError(f"sweep member exceeds the bound b ({s:.6g} > {bb:.6g})")
        l2, r2, _, _ = sides(wf)
        sweep_out.append({"lhs": l2, "rhs": r2, "margin": r2 - l2, "ok": bool(r2 - l2 >= -tol * _scale(l2, r2))})
    comps = {"zero_sum": lhs, "int_v_nu_M": I_M, "int_v_nu_M_minus": I_minus, "log_f_z0": lf0, "cbar_terms": cb,
             "zeros_counted": len(Z)}
    consts = {"C": C, "c_tilde": 1.0 / C, "Cbar": Cbar, "b": bb}
    diag = {"h": h, "Dtilde": Dt.to_json(), "sweep": sweep_out}
    rep = InequalityReport.build("uniform", lhs, rhs, consts, comps, tol, diag)
    if sweep_out and not all(s["ok"] for s in sweep_out):
        rep.verdict = False
    return rep


@dataclass
class BoundednessReport:
    partial_sums: list
    budgets: list
    budget: float
    nondecreasing: bool
    bounded: bool
    verdict: bool
    reports: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "reports"}
        d["reports"] = [r.to_json() for r in self.reports]
        return _jsonable(d)


def verify_individual_1(
    f: HoloFunction,
    M: MajorantSpec,
    w: ScalarField | None,
    v,
    exhaustion: Sequence,
    z0,
    b: float | None = None,
    Dtilde: ModelDomain | None = None,
    divisor: ZeroDivisor | None = None,
    tol: float = DEFAULT_TOL,
) -> BoundednessReport:
    """Partial zero sums over D minus S_k along a shrinking ladder S_1, S_2, ...

    They must not decrease and must stay below the budget of the
    innermost S.  With ``w`` given, v <= w is required on the support of
    nu_M outside the innermost S.
    """
    vf = _field_of(v)
    ladder = [as_balls(S) for S in exhaustion]
    if not ladder:
        raise ValueError("empty exhaustion")
    inner = ladder[-1]
    if w is not None:
        sup = M.charge.restrict(_outside(inner))
        dom = sup.domain
        mask = np.zeros(dom.shape, bool)
        if sup.density is not None:
            mask |= sup.density != 0
        for p in sup.points:
            i, j = dom.index(p)
            if dom.in_bounds(i, j):
                mask[i, j] = True
        vv = _on(vf, dom)
        wv = _on(w, dom)
        with np.errstate(invalid="ignore"):
            bad = mask & (vv > wv + 1e-9)
        if bad.any():
            raise ValueError(f"v <= w fails on the support of nu_M at {int(bad.sum())} cells")
    sums, budgets, reps = [], [], []
    for S in ladder:
        rep = verify_uniform(f, M, _with_S(vf, S), S, z0, b, Dtilde, tol, divisor)
        reps.append(rep)
        sums.append(rep.lhs)
        budgets.append(rep.rhs)
    budget = budgets[-1]
    slack = tol * max(1.0, abs(budget))
    nondec = all(b2 >= a2 - slack for a2, b2 in zip(sums, sums[1:]))
    bounded = max(sums) <= budget + slack
    return BoundednessReport(sums, budgets, budget, nondec, bounded, nondec and bounded, reps)


def verify_individual_2(
    f: HoloFunction,
    M: MajorantSpec,
    w: ScalarField,
    S,
    z0,
    b: float | None = None,
    key: str = "i",
    Dtilde: ModelDomain | None = None,
    tol: float = DEFAULT_TOL,
    relax_tol: float = 1e-8,
) -> InequalityReport:
    """Greatest subharmonic minorant of w, classified as a test function,
    then run through verify_uniform.

    The minorant equals w on the cells next to S, which lie within h of
    S, so it is a test function for S grown by h; the constants use that
    set.
    """
    balls = as_balls(S)
    h = w.domain.h
    grown = as_balls([(c, r + h) for c, r in balls])
    info: dict = {}
    gm = greatest_minorant(w, tol=relax_tol, info=info)
    bb = test_bound(w, balls) if b is None else float(b)
    cls = classify_test(gm, balls, bb)
    if not cls.member:
        raise ValueError(f"condition ({key}) path failed: minorant clause {cls.failing} fails")
    rep = verify_uniform(f, M, TestFunction(gm, bb, grown), grown, z0, bb, Dtilde, tol)
    rep.check = "individual2"
    rep.diagnostics["relaxation"] = {k: v for k, v in info.items() if k != "candidate_gaps"}
    rep.diagnostics["key"] = key
    rep.diagnostics["S_grown_by"] = h
    return rep


# --------------------------------------------------------------------------
# proof chain


@dataclass
class ChainReport:
    n_list: list
    residuals: list  # per n: (u, u1, u2)
    margins: list
    limit_margin: float
    monotone: bool
    verdict: bool
    tolerance: float
    slack: float
    masses: list = field(default_factory=list)

    def to_json(self) -> dict:
        return _jsonable(asdict(self))


def proof_chain_check(
    u: ScalarField,
    M: MajorantSpec,
    Vtilde: ScalarField,
    x0,
    n_list: Sequence[int] = (4, 16, 64),
    tol: float = 5e-3,
    slack: float = 1e-3,
) -> ChainReport:
    """Poisson-Jensen identities for u, u1, u2 with the Jensen measures of
    the truncations V_n, and the combined margin

        [M(x0) + int V_n dnu_1] - [u(x0) + int V_n dnu_u + int V_n dnu_2]

    which must be nonnegative and nondecreasing in n.
    """
    x0 = complex(x0)
    ux0 = float(u(x0))
    if not math.isfinite(ux0):
        raise ValueError("u(x0) must be finite")
    if not M.in_dom(x0):
        raise ValueError("x0 is not in dom M")
    nu_u = riesz_measure(u)
    nu1, nu2 = M.nu1, M.nu2
    Mx0 = M.value(x0)

    def margin(V):
        return (Mx0 + nu1.integrate(V)) - (ux0 + nu_u.integrate(V) + nu2.integrate(V))

    res, margins, masses = [], [], []
    for n in n_list:
        Vn = truncate_sequence(Vtilde, n)
        mu = duality_inverse(Vn, x0)
        r = [poisson_jensen_residual(f, mu, V=Vn, nu=nu).residual for f, nu in ((u, nu_u), (M.u1, nu1), (M.u2, nu2))]
        res.append(r)
        masses.append(mu.mass)
        margins.append(float(margin(Vn)))
    lim = float(margin(Vtilde))
    mono = all(b2 >= a2 - slack for a2, b2 in zip(margins, margins[1:])) and margins[-1] <= lim + slack
    ok = mono and all(max(r) <= tol for r in res) and min(margins) >= -slack
    return ChainReport(list(n_list), res, margins, lim, mono, ok, tol, slack, masses)


# --------------------------------------------------------------------------
# duality and Poincare-Lelong


@dataclass
class DualityReport:
    tv: float
    near_pole_mass: float
    mass: float
    ratio: float
    weak_error: float
    is_jensen: bool
    verdict: bool
    bins: int
    tolerance: float

    def to_json(self) -> dict:
        return _jsonable(asdict(self))


def _angular_hist(pts, w, center: complex, bins: int) -> np.ndarray:
    k = ((np.angle(np.asarray(pts) - center) + np.pi) / (2 * np.pi) * bins).astype(int) % bins
    return np.bincount(k, weights=np.asarray(w, dtype=float), minlength=bins)


def duality_check(
    D: ModelDomain,
    x0,
    h: float = 1.0 / 256,
    bins: int = 32,
    tol: float = 0.02,
    pole_radius: float = 0.2,
    radii: tuple = (0.25, 0.55),
    rt_center=None,
) -> DualityReport:
    """Jensen measure of the extended Green function against harmonic
    measure (angular total variation over ``bins`` sectors), and the
    weak error of the round trip measure -> potential -> measure for an
    even mix of two circle measures."""
    from .green import extend_green, green_function, harmonic_measure
    from .jensen import JensenMeasure, is_jensen, log_potential, weak_error

    if D.kind != "disk":
        raise ValueError("duality check runs on disks")
    x0 = complex(round(complex(x0).real / h) * h, round(complex(x0).imag / h) * h)
    big = ModelDomain.disk(D.center, D.R * 1.25).grid(h)
    g = green_function(D, x0, h=h)
    V = extend_green(g, D, target=big)
    mu = duality_inverse(V, x0)
    hm = harmonic_measure(D, x0)
    c = mu.charge
    far_a = np.abs(c.points - x0) > pole_radius
    pts, w = [c.points[far_a]], [c.masses[far_a]]
    near = float(c.masses[~far_a].sum())
    if c.density is not None:
        dm = c.density != 0
        far = np.abs(big.nodes - x0) > pole_radius
        pts.append(big.nodes[dm & far])
        w.append(c.density[dm & far])
        near += float(c.density[dm & ~far].sum())
    H1 = _angular_hist(np.concatenate(pts), np.concatenate(w), D.center, bins)
    H2 = _angular_hist(hm.points, hm.weights, D.center, bins)
    tv = float(np.abs(H1 - H2).sum() + abs(near))
    xr = D.center if rt_center is None else complex(rt_center)
    xr = complex(round(xr.real / h) * h, round(xr.imag / h) * h)
    m1 = JensenMeasure.circle(xr, radii[0] * D.R, big)
    m2 = JensenMeasure.circle(xr, radii[1] * D.R, big)
    m = m1.mix(m2, 0.5)
    back = duality_inverse(log_potential(m, big))
    we = float(weak_error(m, back))
    jen = bool(is_jensen(mu).verdict)
    ok = tv <= tol and we <= tol and jen
    return DualityReport(tv, near, float(mu.mass), estimate_normalization(V, x0), we, jen, ok, bins, tol)
