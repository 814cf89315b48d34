"""Model domains, Green functions, harmonic measure and a Dirichlet solver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .grid import GridDomain, ScalarField, as_balls, in_balls

KINDS = ("disk", "annulus", "rectangle", "interval")


class ConvergenceError(RuntimeError):
    """Iterative solver hit its sweep cap."""

    def __init__(self, msg: str, sweeps: int, residual: float):
        super().__init__(f"{msg} after {sweeps} sweeps (last change {residual:.3e})")
        self.sweeps = sweeps
        self.residual = residual


@dataclass(frozen=True)
class ModelDomain:
    """Disk, annulus, rectangle or interval, all regular for Dirichlet."""

    kind: str
    center: complex = 0j
    R: float = 1.0
    r: float = 0.0
    bounds: tuple = (0.0, 1.0, 0.0, 1.0)  # x0, x1, y0, y1 for rectangles; a, b for intervals

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        object.__setattr__(self, "center", complex(self.center))
        if self.kind == "disk" and self.R <= 0:
            raise ValueError("disk radius must be positive")
        if self.kind == "annulus" and not (0 < self.r < self.R):
            raise ValueError("annulus needs 0 < r < R")
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            if not (x0 < x1 and y0 < y1):
                raise ValueError("empty rectangle")
        if self.kind == "interval":
            a, b = self.bounds[:2]
            if not a < b:
                raise ValueError("empty interval")

    # constructors -----------------------------------------------------
    @classmethod
    def disk(cls, center=0j, R: float = 1.0) -> "ModelDomain":
        return cls("disk", complex(center), float(R))

    @classmethod
    def annulus(cls, center=0j, r: float = 0.5, R: float = 1.0) -> "ModelDomain":
        return cls("annulus", complex(center), float(R), float(r))

    @classmethod
    def rectangle(cls, x0, x1, y0, y1) -> "ModelDomain":
        return cls("rectangle", bounds=(float(x0), float(x1), float(y0), float(y1)))

    @classmethod
    def interval(cls, a: float, b: float) -> "ModelDomain":
        return cls("interval", bounds=(float(a), float(b)))

    @classmethod
    def from_json(cls, d: dict) -> "ModelDomain":
        kind = d["kind"]
        c = d.get("center", [0.0, 0.0])
        c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
        if kind == "disk":
            return cls.disk(c, d.get("R", 1.0))
        if kind == "annulus":
            return cls.annulus(c, d["r"], d["R"])
        if kind == "rectangle":
            return cls.rectangle(*d["bounds"])
        if kind == "interval":
            return cls.interval(*d["bounds"])
        raise ValueError(f"unknown domain kind {kind!r}")

    def to_json(self) -> dict:
        if self.kind == "disk":
            return {"kind": "disk", "center": [self.center.real, self.center.imag], "R": self.R}
        if self.kind == "annulus":
            return {"kind": "annulus", "center": [self.center.real, self.center.imag], "r": self.r, "R": self.R}
        return {"kind": self.kind, "bounds": list(self.bounds)}

    # geometry ---------------------------------------------------------
    def _planar(self):
        if self.kind == "interval":
            raise ValueError("interval domains are one-dimensional")

    def sdf(self, z) -> np.ndarray:
        """Signed distance (negative inside); exact for disks and rectangles."""
        self._planar()
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return np.abs(z - self.center) - self.R
        if self.kind == "annulus":
            d = np.abs(z - self.center)
            return np.maximum(d - self.R, self.r - d)
        x0, x1, y0, y1 = self.bounds
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        qx = np.abs(z.real - cx) - (x1 - x0) / 2
        qy = np.abs(z.imag - cy) - (y1 - y0) / 2
        outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
        return outside + np.minimum(np.maximum(qx, qy), 0)

    def contains(self, z) -> np.ndarray:
        if self.kind == "interval":
            a, b = self.bounds[:2]
            x = np.asarray(z)
            return (np.imag(x) == 0) & (np.real(x) > a) & (np.real(x) < b)
        return self.sdf(z) < 0

    def bounding_box(self) -> tuple:
        self._planar()
        if self.kind in ("disk", "annulus"):
            c, R = self.center, self.R
            return c - R * (1 + 1j), c + R * (1 + 1j)
        x0, x1, y0, y1 = self.bounds
        return complex(x0, y0), complex(x1, y1)

    def grid(self, h: float, pad: int = 3, exclusion=()) -> GridDomain:
        return GridDomain.from_model(self, h, pad=pad, exclusion=exclusion)

    def boundary_points(self, K: int = 4096) -> np.ndarray:
        """K points spread over the boundary (by arc length)."""
        self._planar()
        th = 2 * math.pi * np.arange(K) / K
        if self.kind == "disk":
            return self.center + self.R * np.exp(1j * th)
        if self.kind == "annulus":
            k_in = max(1, int(round(K * self.r / (self.r + self.R))))
            ti = 2 * math.pi * np.arange(k_in) / k_in
            to = 2 * math.pi * np.arange(K - k_in) / (K - k_in)
            return np.concatenate([self.center + self.R * np.exp(1j * to), self.center + self.r * np.exp(1j * ti)])
        x0, x1, y0, y1 = self.bounds
        per = 2 * ((x1 - x0) + (y1 - y0))
        s = per * np.arange(K) / K
        w, hgt = x1 - x0, y1 - y0
        out = np.empty(K, complex)
        for n, t in enumerate(s):
            if t < w:
                out[n] = complex(x0 + t, y0)
            elif t < w + hgt:
                out[n] = complex(x1, y0 + t - w)
            elif t < 2 * w + hgt:
                out[n] = complex(x1 - (t - w - hgt), y1)
            else:
                out[n] = complex(x0, y1 - (t - 2 * w - hgt))
        return out

    def inner_distance(self, z) -> float:
        """Distance from an inside point to the boundary."""
        return float(-self.sdf(complex(z)))


def _require_inside(dom: ModelDomain, p) -> complex:
    p = complex(p)
    if not bool(dom.contains(p)):
        raise ValueError(f"point {p} is not strictly inside the {dom.kind}")
    return p


# --------------------------------------------------------------------------
# Dirichlet solver


def _region_sdf(dom: GridDomain) -> Callable | None:
    if dom.model is None:
        return None
    model_sdf = dom.model.sdf
    balls = dom.exclusion

    def sdf(z):
        d = model_sdf(z)
        for c, r in balls:
            d = np.maximum(d, r - np.abs(z - c))
        return d

    return sdf


def _crossing(sdf, z_in: np.ndarray, z_out: np.ndarray, iters: int = 48) -> np.ndarray:
    """Fraction along each segment where sdf changes sign (vectorized bisection)."""
    lo = np.zeros(z_in.shape)
    hi = np.ones(z_in.shape)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = sdf(z_in + mid * (z_out - z_in)) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return np.clip(0.5 * (lo + hi), 1e-6, 1.0)


_DIRS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class DirichletSystem:
    """Sparse 5-point system on the region with ghost-point boundary rows."""

    domain: GridDomain
    index: np.ndarray  # cell -> unknown number, -1 outside
    A: sparse.csc_matrix
    ghost_rows: np.ndarray  # unknown number of each boundary crossing
    ghost_points: np.ndarray  # crossing locations
    ghost_coef: np.ndarray  # rhs contribution per unit datum (-1/theta)

    def rhs(self, data) -> np.ndarray:
        vals = _eval_data(data, self)
        b = np.zeros(self.A.shape[0])
        np.add.at(b, self.ghost_rows, self.ghost_coef * vals)
        return b


def _eval_data(data, system: DirichletSystem) -> np.ndarray:
    pts = system.ghost_points
    if callable(data) and not isinstance(data, ScalarField):
        return np.asarray(data(pts), dtype=float) * np.ones(pts.shape)
    if np.isscalar(data):
        return np.full(pts.shape, float(data))
    arr = data.values if isinstance(data, ScalarField) else np.asarray(data, dtype=float)
    dom = system.domain
    out = np.empty(pts.shape)
    for n, p in enumerate(pts):
        i, j = dom.index(p)
        out[n] = arr[i, j]
    if np.isnan(out).any():
        raise ValueError("boundary data undefined at some boundary nodes")
    return out


def dirichlet_system(dom: GridDomain) -> DirichletSystem:
    region = dom.region
    n = int(region.sum())
    if n == 0:
        raise ValueError("empty region")
    index = np.full(dom.shape, -1, dtype=np.int64)
    index[region] = np.arange(n)
    cells = np.argwhere(region)
    ci, cj = cells[:, 0], cells[:, 1]
    me = index[ci, cj]
    rows, cols, vals = [me], [me], [np.full(n, -4.0)]
    g_rows, g_pts, g_coef = [], [], []
    sdf = _region_sdf(dom)
    nx, ny = dom.shape
    nodes = dom.nodes
    for di, dj in _DIRS:
        ni, nj = ci + di, cj + dj
        inb = (ni >= 0) & (ni < nx) & (nj >= 0) & (nj < ny)
        nbr = np.full(n, -1, dtype=np.int64)
        nbr[inb] = index[ni[inb], nj[inb]]
        inner = nbr >= 0
        rows.append(me[inner])
        cols.append(nbr[inner])
        vals.append(np.ones(int(inner.sum())))
        out = ~inner
        z_in = nodes[ci[out], cj[out]]
        z_out = z_in + dom.h * complex(di, dj)
        if sdf is None:
            theta = np.ones(z_in.shape)
        else:
            theta = _crossing(sdf, z_in, z_out)
        # ghost value u_i + (datum - u_i)/theta keeps the linear interpolant exact at the crossing
        rows.append(me[out])
        cols.append(me[out])
        vals.append(1.0 - 1.0 / theta)
        g_rows.append(me[out])
        g_pts.append(z_in + theta * (z_out - z_in) if sdf is not None else z_out)
        g_coef.append(-1.0 / theta)
    A = sparse.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return DirichletSystem(
        dom, index, A, np.concatenate(g_rows), np.concatenate(g_pts), np.concatenate(g_coef)
    )


def _sor(system: DirichletSystem, b: np.ndarray, omega: float | None, tol: float, max_sweeps: int):
    dom = system.domain
    idx = system.index
    A = system.A.tocsr()
    diag = A.diagonal()
    off = A - sparse.diags(diag)
    n = A.shape[0]
    cells = np.argwhere(idx >= 0)
    color = (cells[:, 0] + cells[:, 1]) % 2
    red = np.flatnonzero(color == 0)
    black = np.flatnonzero(color == 1)
    off_r, off_b = off[red], off[black]
    if omega is None:
        size = max(dom.shape)
        omega = 2.0 / (1.0 + math.sin(math.pi / size))
    u = np.zeros(n)
    for sweep in range(1, max_sweeps + 1):
        old = u.copy()
        for sel, o in ((red, off_r), (black, off_b)):
            gs = (b[sel] - o @ u) / diag[sel]
            u[sel] += omega * (gs - u[sel])
        change = float(np.max(np.abs(u - old)))
        if change < tol:
            return u, sweep, change
    raise ConvergenceError("SOR did not converge", max_sweeps, change)


def solve_dirichlet(
    dom: GridDomain,
    data,
    method: str = "direct",
    tol: float = 1e-10,
    max_sweeps: int = 200000,
    omega: float | None = None,
    info: dict | None = None,
) -> ScalarField:
    """Discrete harmonic extension of boundary data into the region.

    ``data`` is a callable evaluated at boundary crossings (placed with
    the domain's model when it has one, else at the outside neighbour
    nodes), a constant, or an array/field of values at outside nodes.
    ``method`` is ``"direct"`` (sparse LU) or ``"sor"`` (red-black
    over-relaxation, stopping when successive sweeps differ by < tol).
    """
    system = dirichlet_system(dom)
    b = system.rhs(data)
    if method == "direct":
        u = splu(system.A).solve(b)
        sweeps, change = 0, 0.0
    elif method == "sor":
        u, sweeps, change = _sor(system, b, omega, tol, max_sweeps)
    else:
        raise ValueError(f"unknown method {method!r}")
    if info is not None:
        info.update(method=method, sweeps=sweeps, last_change=change, unknowns=int(b.size))
    vals = np.full(dom.shape, np.nan)
    vals[dom.region] = u
    return ScalarField(dom, vals)


# --------------------------------------------------------------------------
# Green functions


def disk_green(center: complex, R: float, pole: complex) -> Callable:
    """Closed-form Green function of a disk, extended by 0 outside."""
    c, p = complex(center), complex(pole)
    w = p - c

    def g(z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.log(np.abs(R * R - np.conj(w) * (z - c))) - np.log(R * np.abs(z - p))
        val = np.where(np.abs(z - c) < R, np.maximum(val, 0.0), 0.0)
        val = np.where(z == p, np.inf, val)
        return val[()] if val.ndim == 0 else val

    return g


def green_function(dom: ModelDomain, pole, h: float = 1.0 / 256, grid: GridDomain | None = None) -> ScalarField:
    """g_dom(., pole) on the cells of ``dom``.

    Disks use the closed form; annuli and rectangles split off the
    logarithmic singularity and solve for the harmonic remainder.
    """
    if dom.kind == "interval":
        raise ValueError("Green functions are planar here")
    p = _require_inside(dom, pole)
    grid = grid if grid is not None else dom.grid(h)
    if dom.kind == "disk":
        return ScalarField.from_function(grid, disk_green(dom.center, dom.R, p))
    if grid.model is None:
        grid = GridDomain(grid.origin, grid.h, grid.mask, grid.exclusion, dom, False)
    H = solve_dirichlet(grid, lambda z: np.log(np.abs(z - p)))
    with np.errstate(divide="ignore"):
        sing = -np.log(np.abs(grid.nodes - p))
    vals = np.where(grid.region, sing + np.nan_to_num(H.values, nan=0.0), np.nan)
    return ScalarField(grid, vals)


def extend_green(g: ScalarField, dom: ModelDomain, target: GridDomain | None = None) -> ScalarField:
    """Green function extended by 0 off the domain (boundary limit 0)."""
    target = target if target is not None else g.domain.full()
    out = np.zeros(target.shape)
    di, dj = target.offset_to(g.domain)
    src = np.array(g.values)
    inside = dom.contains(target.nodes)
    sub = np.full(target.shape, np.nan)
    nx, ny = g.domain.shape
    i0, j0 = max(di, 0), max(dj, 0)
    i1, j1 = min(di + nx, target.shape[0]), min(dj + ny, target.shape[1])
    sub[i0:i1, j0:j1] = src[i0 - di : i1 - di, j0 - dj : j1 - dj]
    if np.isnan(sub[inside & target.region]).any():
        raise ValueError("target grid reaches inside the domain beyond the Green field")
    out[inside] = sub[inside]
    out[~target.region] = np.nan
    func = None
    if g.func is not None:
        f = g.func

        def func(z):
            z = np.asarray(z, dtype=complex)
            with np.errstate(invalid="ignore"):
                v = np.where(dom.contains(z), f(z), 0.0)
            return v[()] if v.ndim == 0 else v

    return ScalarField(target, out, func)


# --------------------------------------------------------------------------
# harmonic measure


@dataclass(frozen=True)
class BoundaryMeasure:
    """Probability measure carried by boundary atoms."""

    x0: complex
    points: np.ndarray
    weights: np.ndarray

    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, np.asarray(f(self.points), dtype=float)))

    def to_charge(self, domain: GridDomain):
        from .fields import RieszCharge

        return RieszCharge(domain, self.points, self.weights)


def poisson_weights(center: complex, R: float, x0, K: int = 4096) -> tuple:
    th = 2 * math.pi * np.arange(K) / K
    e = np.exp(1j * th)
    w = (complex(x0) - center) / R
    ker = (1 - abs(w) ** 2) / np.abs(e - w) ** 2
    return center + R * e, ker / ker.sum()


def harmonic_measure(dom: ModelDomain, x0, K: int = 4096, h: float = 1.0 / 256) -> BoundaryMeasure:
    """Harmonic measure of ``dom`` at ``x0``.

    Disk: normalized Poisson weights at K equispaced nodes.  Interval:
    the two endpoint atoms reproducing affine functions.  Annulus and
    rectangle: hitting weights of the discrete solver, obtained from
    one adjoint solve.
    """
    if dom.kind == "interval":
        a, b = dom.bounds[:2]
        x = float(np.real(x0))
        if not a < x < b:
            raise ValueError("x0 must lie strictly inside the interval")
        return BoundaryMeasure(complex(x), np.array([a, b], complex), np.array([(b - x) / (b - a), (x - a) / (b - a)]))
    x0 = _require_inside(dom, x0)
    if dom.kind == "disk":
        pts, w = poisson_weights(dom.center, dom.R, x0, K)
        return BoundaryMeasure(x0, pts, w)
    grid = dom.grid(h)
    system = dirichlet_system(grid)
    e = np.zeros(system.A.shape[0])
    for i, j, wt in grid._corners(np.array([x0])):
        i, j = int(i[0]), int(j[0])
        if wt[0] > 1e-14:
            k = system.index[i, j]
            if k < 0:
                raise ValueError("x0 too close to the boundary for the grid")
            e[k] += wt[0]
    y = splu(system.A).solve(e, trans="T")
    w = y[system.ghost_rows] * system.ghost_coef
    return BoundaryMeasure(x0, system.ghost_points, w)


def default_dtilde(S, x0, h: float, margin_cells: int = 4) -> ModelDomain:
    """Smallest disk about x0 holding S with a margin of a few cells."""
    balls = as_balls(S)
    x0 = complex(x0)
    rad = max(abs(c - x0) + r for c, r in balls)
    return ModelDomain.disk(x0, rad + margin_cells * h)


def boundary_of_balls(S, K: int = 4096) -> np.ndarray:
    """Sample points of the boundary of a union of closed balls."""
    balls = as_balls(S)
    pts = []
    th = 2 * math.pi * np.arange(K) / K
    for n, (c, r) in enumerate(balls):
        z = c + r * np.exp(1j * th)
        others = balls[:n] + balls[n + 1 :]
        if others:
            z = z[~in_balls(z, [(oc, orad * (1 - 1e-12)) for oc, orad in others])]
        pts.append(z)
    return np.concatenate(pts) if pts else np.zeros(0, complex)
