"""Test functions near the boundary, their extension to Jensen potentials,
and the greatest subharmonic minorant."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import splu

from .fields import check_subharmonic, riesz_measure, subharmonic_defect, violation_mask
from .green import ModelDomain, boundary_of_balls, dirichlet_system, extend_green, green_function
from .grid import GridDomain, ScalarField, _on, as_balls, in_balls, neighbour_sum
from .jensen import estimate_normalization

FLOOR = -40.0


@dataclass
class TestFunction:
    """Nonnegative subharmonic v on D minus S with bound b."""

    field: ScalarField
    b: float
    S: tuple = ()

    __test__ = False

    def __post_init__(self):
        self.S = as_balls(self.S)

    def __call__(self, z):
        return self.field(z)

    def collar_profile(self, count: int = 8) -> list:
        return collar_maxima(self.field, count)


def collar_maxima(v: ScalarField, count: int = 8) -> list:
    """Max of v over each of the first ``count`` boundary collars of D."""
    dom = v.domain
    out = []
    for k in range(count):
        sel = dom.collar(k) & dom.region
        out.append(float(np.max(v.values[sel])) if sel.any() else float("nan"))
    return out


@dataclass
class ClassReport:
    member: bool
    failing: str | None
    min_value: float
    sup: float
    violations: int
    collar_max: list
    decay_tol: float
    details: dict = field(default_factory=dict)


def _with_S(v: ScalarField, S) -> ScalarField:
    balls = as_balls(S)
    if not balls or v.domain.exclusion == balls:
        return v
    dom = v.domain.with_exclusion(balls)
    return ScalarField(dom, np.where(dom.region, v.values, np.nan), v.func)


def classify_test(v: ScalarField, S=(), b: float = 1.0, tol: float = 1e-9, decay_tol: float | None = None) -> ClassReport:
    """Membership in the class of test functions bounded by b.

    Clauses: (i) v >= 0, (ii) discretely subharmonic on D minus S,
    (iii) sup v <= b, (iv) outermost-collar max <= decay tolerance
    (default 10 h).
    """
    v = _with_S(v, S)
    h = v.domain.h
    dt = 10 * h if decay_tol is None else decay_tol
    vals = v.values[v.domain.region]
    vmin = float(np.min(vals)) if vals.size else 0.0
    vsup = float(np.max(vals)) if vals.size else 0.0
    bad = check_subharmonic(v, tol)
    collars = collar_maxima(v, 4)
    failing = None
    if vmin < -tol:
        failing = "nonnegative"
    elif bad:
        failing = "subharmonic"
    elif vsup > b + max(tol, 1e-12 * abs(b)):
        failing = "bounded"
    elif not (collars[0] <= dt):
        failing = "boundary_decay"
    return ClassReport(failing is None, failing, vmin, vsup, len(bad), collars, dt)


# --------------------------------------------------------------------------
# gluing


class CompatibilityError(ValueError):
    def __init__(self, witnesses):
        super().__init__(f"boundary compatibility fails at {len(witnesses)} cells, e.g. {witnesses[:5]}")
        self.witnesses = witnesses


def glue(v: ScalarField, v0: ScalarField, rings: int = 2, tol: float = 1e-9) -> ScalarField:
    """max(v, v0) on the region of v, v0 on the rest of v0's region.

    Compatibility: v <= v0 + tol on the ``rings`` layers of O next to
    the part of its boundary that lies inside O0.
    """
    dom0 = v0.domain
    vv = _on(v, dom0)
    O = ~np.isnan(vv)
    O0 = dom0.region
    if (O & ~O0).any():
        raise ValueError("region of v is not contained in the region of v0")
    rest = O0 & ~O
    near = ndimage.binary_dilation(rest, structure=np.ones((3, 3), bool), iterations=rings) & O
    with np.errstate(invalid="ignore"):
        viol = near & (vv > v0.values + tol)
    if viol.any():
        raise CompatibilityError([tuple(int(t) for t in p) for p in np.argwhere(viol)])
    out = np.array(v0.values)
    out[O] = np.fmax(vv[O], v0.values[O])
    return ScalarField(dom0, out)


# --------------------------------------------------------------------------
# extension to a Jensen potential


def boundary_inf(g: ScalarField, S, K: int = 4096) -> float:
    """inf of g over the boundary of S (exact evaluator when available)."""
    pts = boundary_of_balls(S, K)
    return float(np.min(g(pts)))


def test_bound(v: ScalarField, S=(), K: int = 4096) -> float:
    """sup of v over the closure of D minus S: grid maximum together with
    samples on the boundary of S (the sup may sit on that boundary)."""
    vals = v.values[v.domain.region]
    sup = float(np.max(vals)) if vals.size else 0.0
    balls = as_balls(S)
    if balls and v.func is not None:
        with np.errstate(invalid="ignore", divide="ignore"):
            edge = np.asarray(v.func(boundary_of_balls(balls, K)), dtype=float)
        edge = edge[np.isfinite(edge)]
        if edge.size:
            sup = max(sup, float(edge.max()))
    return sup


def c_tilde(S, x0, Dtilde: ModelDomain, b: float, h: float = 1.0 / 256) -> float:
    """(1/b) inf over the boundary of S of the Green function of Dtilde."""
    if b <= 0:
        raise ValueError("b must be positive")
    g = green_field(Dtilde, x0, h)
    a = boundary_inf(g, S)
    if not a > 0:
        raise ValueError("Green function does not stay positive on the boundary of S")
    return a / b


def green_field(Dtilde: ModelDomain, x0, h: float, target: GridDomain | None = None) -> ScalarField:
    """Extended Green function of Dtilde with pole x0 on ``target``."""
    g = green_function(Dtilde, x0, h=h)
    if target is None:
        return extend_green(g, Dtilde)
    return extend_green(g, Dtilde, target=target)


def extend_test(
    v: ScalarField | TestFunction,
    S,
    x0,
    Dtilde: ModelDomain,
    b: float,
    D: ModelDomain | None = None,
) -> tuple:
    """The function V~ and constant c~ built from a test function.

    V~ is the Green function of Dtilde on S, max(g, c~ v) on D minus S
    (which is c~ v off Dtilde since g vanishes there) and 0 outside D.
    """
    if isinstance(v, TestFunction):
        v = v.field
    balls = as_balls(S)
    x0 = complex(x0)
    if not in_balls(np.array([x0]), [(c, r * (1 - 1e-12)) for c, r in balls])[0]:
        raise ValueError("x0 must lie in the interior of S")
    dom = v.domain
    if not dom.is_node(x0):
        raise ValueError("x0 must be a grid node")
    full = GridDomain(dom.origin, dom.h, dom.mask, (), dom.model, False)
    g = green_field(Dtilde, x0, dom.h, target=full)
    a = boundary_inf(g, balls)
    if not a > 0:
        raise ValueError("Green function does not stay positive on the boundary of S")
    c = a / b
    vv = _on(v, full)
    gv = g.values
    s_cells = full.mask & in_balls(full.nodes, balls)
    with np.errstate(invalid="ignore"):
        out = np.where(s_cells, gv, np.fmax(gv, c * np.nan_to_num(vv, nan=0.0)))
    out = np.where(full.mask, out, np.nan)
    func = None
    if g.func is not None and v.func is not None:
        gf, vf = g.func, v.func
        inside_D = D.contains if D is not None else (lambda z: np.ones(np.shape(z), bool))

        def func(z):
            z = np.asarray(z, dtype=complex)
            with np.errstate(invalid="ignore", divide="ignore"):
                gz = gf(z)
                inS = in_balls(z, balls)
                vz = np.where(inS, 0.0, np.nan_to_num(vf(z), nan=0.0))
                val = np.where(inS, gz, np.fmax(gz, c * vz))
            val = np.where(inside_D(z), val, 0.0)
            return val[()] if val.ndim == 0 else val

    return ScalarField(full, out, func), c


@dataclass
class VVVReport:
    harmonic_residual: float
    collar_max: float
    ratio: float
    passed: bool
    decay_tol: float


def vvv_checks(Vt: ScalarField, S, x0, pole_radius: int = 3, decay_tol: float | None = None,
               harmonic_tol: float = 5e-3, ratio_tol: float = 0.02) -> VVVReport:
    """Discrete versions of: harmonic on Int S off x0, boundary limit 0, ratio 1."""
    dom = Vt.domain
    h = dom.h
    balls = as_balls(S)
    s_cells = dom.mask & in_balls(dom.nodes, balls)
    int_s = s_cells.copy()
    int_s[1:-1, 1:-1] &= s_cells[2:, 1:-1] & s_cells[:-2, 1:-1] & s_cells[1:-1, 2:] & s_cells[1:-1, :-2]
    int_s &= np.abs(dom.nodes - complex(x0)) > pole_radius * h
    d = subharmonic_defect(Vt)
    res = float(np.max(np.abs(d[int_s]))) if int_s.any() else 0.0
    dt = 10 * h if decay_tol is None else decay_tol
    cm = collar_maxima(Vt, 1)[0]
    ratio = _ratio(Vt, x0)
    ok = res <= harmonic_tol and cm <= dt and abs(ratio - 1) <= ratio_tol
    return VVVReport(res, cm, ratio, ok, dt)


def _ratio(V: ScalarField, x0) -> float:
    charge = riesz_measure(V).without_atoms_near(complex(x0), V.domain.h)
    return estimate_normalization(V, x0, charge=charge)


def truncate_sequence(Vt: ScalarField, n: int) -> ScalarField:
    """V_n = max(0, V~ - 1/n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t = 1.0 / n
    with np.errstate(invalid="ignore"):
        vals = np.where(np.isnan(Vt.values), np.nan, np.maximum(Vt.values - t, 0.0))
    func = None
    if Vt.func is not None:
        f = Vt.func

        def func(z):
            return np.maximum(f(z) - t, 0.0)

    return ScalarField(Vt.domain, vals, func)


@dataclass
class PotentialReport:
    passed: bool
    nonnegative: bool
    subharmonic: bool
    compact: bool
    ratio: float
    violations: int
    failing: list


def is_jensen_potential(V: ScalarField, x0, tol: float = 0.02, sub_tol: float = 1e-9, pole_radius: int = 3) -> PotentialReport:
    """Nonnegative, subharmonic off x0, vanishing near the boundary of D,
    and normalization ratio at most 1 + tol."""
    dom = V.domain
    vals = V.values[dom.region]
    nonneg = bool(np.all(vals[~np.isnan(vals)] >= -1e-12))
    near = np.zeros(dom.shape, bool)
    i, j = dom.index(x0)
    near[max(i - pole_radius, 0) : i + pole_radius + 1, max(j - pole_radius, 0) : j + pole_radius + 1] = True
    bad = violation_mask(V, sub_tol, exclude=near)
    sub = not bad.any()
    outer = dom.collar(0) & dom.region
    compact = bool(np.all(V.values[outer] == 0.0))
    ratio = _ratio(V, x0) if np.any(vals > 0) else 0.0
    failing = [n for n, ok in (("nonnegative", nonneg), ("subharmonic", sub), ("compact", compact), ("ratio", ratio <= 1 + tol)) if not ok]
    return PotentialReport(not failing, nonneg, sub, compact, ratio, int(bad.sum()), failing)


# --------------------------------------------------------------------------
# greatest subharmonic minorant


def s_adjacent(dom: GridDomain) -> np.ndarray:
    """Cells of D minus S with a 4-neighbour in S (the discrete boundary of S)."""
    s = dom.s_mask
    adj = np.zeros(dom.shape, bool)
    adj[1:, :] |= s[:-1, :]
    adj[:-1, :] |= s[1:, :]
    adj[:, 1:] |= s[:, :-1]
    adj[:, :-1] |= s[:, 1:]
    return adj & dom.region


def greatest_minorant(
    w: ScalarField,
    tol: float = 1e-8,
    max_sweeps: int = 1_000_000,
    omega: float | None = None,
    candidates: Sequence[ScalarField] = (),
    info: dict | None = None,
) -> ScalarField:
    """Largest discretely subharmonic v <= w on D minus S vanishing on the
    boundary of D.

    The Laplacian is the ghost-point operator of the Dirichlet solver with
    datum 0 where a stencil arm crosses the boundary of D.  Cells next to
    S carry no sub-mean constraint, so v = w there.  The iteration starts
    from min(w, H), H the harmonic extension of those values, and applies
    projected red-black over-relaxation v <- min(w, v + omega (gs(v) - v))
    until a sweep moves no cell by ``tol`` or more and the largest
    sub-mean defect of the iterate is below tol / 10.
    """
    dom = w.domain
    wv = np.array(w.values)
    reg = dom.region
    low = reg & (wv < FLOOR)
    if low.any():
        warnings.warn(f"w below {FLOOR} at {int(low.sum())} cells; clipped", RuntimeWarning)
        wv = np.where(low, FLOOR, wv)
    adj = s_adjacent(dom)
    if np.isinf(wv[adj]).any():
        raise ValueError("w must be bounded next to S")
    free = reg & ~adj
    out = np.where(reg, 0.0, np.nan)
    out[adj] = wv[adj]
    sweep, step, defect = 0, 0.0, 0.0
    if omega is None:
        omega = 2.0 / (1.0 + math.sin(math.pi / max(dom.shape)))
    if free.any():
        system = dirichlet_system(GridDomain(dom.origin, dom.h, free, (), dom.model, False))
        # datum: w on S-adjacent nodes, 0 on the boundary of D
        gp = system.ghost_points
        datum = np.zeros(gp.shape)
        for n, p in enumerate(gp):
            if dom.is_node(p):
                i, j = dom.index(p)
                if dom.in_bounds(i, j) and adj[i, j]:
                    datum[n] = wv[i, j]
        rhs = np.zeros(system.A.shape[0])
        np.add.at(rhs, system.ghost_rows, system.ghost_coef * datum)
        A = system.A.tocsr()
        H = splu(system.A).solve(rhs)
        obst = wv[free]
        u = np.minimum(obst, H)
        diag = A.diagonal()
        off = (A - sparse.diags(diag)).tocsr()
        cells = np.argwhere(free)
        color = (cells[:, 0] + cells[:, 1]) % 2
        parts = [(sel, off[sel]) for sel in (np.flatnonzero(color == 0), np.flatnonzero(color == 1))]
        for sweep in range(1, max_sweeps + 1):
            step = 0.0
            for sel, o in parts:
                gs = (rhs[sel] - o @ u) / diag[sel]
                new = np.minimum(obst[sel], u[sel] + omega * (gs - u[sel]))
                if new.size:
                    step = max(step, float(np.max(np.abs(new - u[sel]))))
                u[sel] = new
            if step < tol:
                # a small step can still leave sub-mean defects near step/omega
                defect = float(np.max(-(A @ u - rhs) / np.abs(diag)))
                if defect <= 0.1 * tol:
                    break
        else:
            warnings.warn(f"minorant relaxation stopped at the sweep cap (step {step:.2e})", RuntimeWarning)
        out[free] = u
    result = ScalarField(dom, out)
    if info is not None:
        info.update(sweeps=sweep, last_step=step, max_defect=defect, omega=omega, tol=tol, max_sweeps=max_sweeps)
        gaps = []
        for cand in candidates:
            cv = _on(cand, dom)
            gaps.append(float(np.nanmax(np.where(reg, cv - out, np.nan))))
        info["candidate_gaps"] = gaps
    return result


def domination_constant(g: ScalarField, b: float, dom: GridDomain) -> float:
    """C = b / inf g over the discrete boundary of S."""
    adj = s_adjacent(dom)
    gv = _on(g, dom)
    return b / float(np.min(gv[adj]))
