"""Planar grid domains and grid-sampled extended-real fields.

All grids live on the lattice ``h * (Z + iZ)``: node ``[i, j]`` of a
domain sits at ``origin + h*i + 1j*h*j`` with ``origin`` a lattice point,
so fields built on different domains with the same spacing line up
cell for cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import ndimage

Ball = tuple  # (center: complex, radius: float)


def _snap(x: float, h: float, up: bool) -> float:
    k = math.ceil(x / h - 1e-9) if up else math.floor(x / h + 1e-9)
    return k * h


def as_balls(balls: Iterable | None) -> tuple:
    """Normalize an exclusion set description to ((center, radius), ...)."""
    if balls is None:
        return ()
    out = []
    for b in balls:
        if isinstance(b, dict):
            c = b["center"]
            c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
            out.append((c, float(b["radius"])))
        else:
            c, r = b
            out.append((complex(c), float(r)))
    return tuple(out)


def in_balls(z, balls) -> np.ndarray:
    """Membership of points in the closed union of balls."""
    z = np.asarray(z, dtype=complex)
    hit = np.zeros(z.shape, dtype=bool)
    for c, r in balls:
        hit |= np.abs(z - c) <= r
    return hit


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Discretized planar domain.

    ``mask`` marks the cells of D; ``exclusion`` is a closed set S given
    as a union of closed balls, removed from ``region``.  ``model`` is an
    optional continuous description (anything with ``sdf``) used to place
    boundary crossings between cells.
    """

    origin: complex
    h: float
    mask: np.ndarray
    exclusion: tuple = ()
    model: object = None
    check_connected: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        m = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mask", m)
        object.__setattr__(self, "exclusion", as_balls(self.exclusion))
        if self.check_connected and m.any():
            _, ncomp = ndimage.label(m)
            if ncomp != 1:
                raise ValueError(f"interior mask has {ncomp} components; expected 1")
        for c, r in self.exclusion:
            ring = np.abs(self.nodes - c) <= r + 2 * self.h
            if ring.any() and not m[ring].all():
                raise ValueError(f"exclusion ball {c}, {r} is not compactly inside the domain")

    # construction -----------------------------------------------------
    @classmethod
    def box(cls, lo: complex, hi: complex, h: float, pad: int = 0, mask=None) -> "GridDomain":
        """Lattice box covering [lo, hi] widened by ``pad`` cells."""
        x0 = _snap(lo.real, h, up=False) - pad * h
        y0 = _snap(lo.imag, h, up=False) - pad * h
        x1 = _snap(hi.real, h, up=True) + pad * h
        y1 = _snap(hi.imag, h, up=True) + pad * h
        nx = int(round((x1 - x0) / h)) + 1
        ny = int(round((y1 - y0) / h)) + 1
        if mask is None:
            mask = np.ones((nx, ny), dtype=bool)
        return cls(complex(x0, y0), h, mask, check_connected=False)

    @classmethod
    def from_model(cls, model, h: float, pad: int = 3, exclusion=()) -> "GridDomain":
        """Grid of a ModelDomain; cells whose centers lie inside form the mask."""
        lo, hi = model.bounding_box()
        base = cls.box(lo, hi, h, pad=pad)
        mask = model.contains(base.nodes)
        return cls(base.origin, h, mask, exclusion=exclusion, model=model)

    def with_mask(self, mask: np.ndarray, check_connected: bool = False) -> "GridDomain":
        return GridDomain(self.origin, self.h, mask, self.exclusion, self.model, check_connected)

    def with_exclusion(self, balls) -> "GridDomain":
        return GridDomain(self.origin, self.h, self.mask, balls, self.model, False)

    def full(self) -> "GridDomain":
        """Same lattice box, every cell in the region, no exclusion."""
        return GridDomain(self.origin, self.h, np.ones(self.shape, dtype=bool), (), None, False)

    # geometry ---------------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.mask.shape

    @cached_property
    def nodes(self) -> np.ndarray:
        nx, ny = self.shape
        i = np.arange(nx)[:, None]
        j = np.arange(ny)[None, :]
        return self.origin + self.h * i + 1j * self.h * j

    @cached_property
    def s_mask(self) -> np.ndarray:
        """Cells whose centers lie in the closed exclusion set S."""
        return in_balls(self.nodes, self.exclusion) & self.mask

    @cached_property
    def region(self) -> np.ndarray:
        """Cells of D minus S."""
        return self.mask & ~self.s_mask

    @cached_property
    def interior(self) -> np.ndarray:
        """Region cells whose four neighbours are region cells."""
        return interior_of(self.region)

    @cached_property
    def collar_depth(self) -> np.ndarray:
        """Chessboard depth of each D cell from the outside (1 = outermost)."""
        padded = np.pad(self.mask, 1)
        d = ndimage.distance_transform_cdt(padded, metric="chessboard")
        return d[1:-1, 1:-1]

    def collar(self, k: int) -> np.ndarray:
        """The k-th boundary ring of D (k = 0 outermost)."""
        return self.collar_depth == k + 1

    def collars(self, count: int) -> list:
        return [self.collar(k) for k in range(count)]

    @property
    def area(self) -> float:
        return float(self.region.sum()) * self.h**2

    def fractional_index(self, z) -> tuple:
        z = np.asarray(z, dtype=complex)
        return (z.real - self.origin.real) / self.h, (z.imag - self.origin.imag) / self.h

    def index(self, z) -> tuple:
        """Nearest node index of a single point."""
        fi, fj = self.fractional_index(complex(z))
        return int(round(float(fi))), int(round(float(fj)))

    def is_node(self, z, tol: float = 1e-9) -> bool:
        fi, fj = self.fractional_index(complex(z))
        return abs(fi - round(float(fi))) < tol and abs(fj - round(float(fj))) < tol

    def in_bounds(self, i: int, j: int) -> bool:
        return 0 <= i < self.shape[0] and 0 <= j < self.shape[1]

    def offset_to(self, other: "GridDomain") -> tuple:
        """Integer index shift from ``other``'s indices to this grid's."""
        if not math.isclose(self.h, other.h, rel_tol=1e-12):
            raise ValueError("grids have different spacing")
        d = (other.origin - self.origin) / self.h
        di, dj = round(d.real), round(d.imag)
        if abs(d.real - di) > 1e-6 or abs(d.imag - dj) > 1e-6:
            raise ValueError("grids are not on a common lattice")
        return int(di), int(dj)

    def _corners(self, z):
        fi, fj = self.fractional_index(z)
        bad = ~(np.isfinite(fi) & np.isfinite(fj))
        # non-finite points get an off-grid stencil
        fi = np.where(bad, -2.0, fi)
        fj = np.where(bad, -2.0, fj)
        i0 = np.floor(fi).astype(int)
        j0 = np.floor(fj).astype(int)
        ti = fi - i0
        tj = fj - j0
        idx = []
        for di, dj, w in (
            (0, 0, (1 - ti) * (1 - tj)),
            (1, 0, ti * (1 - tj)),
            (0, 1, (1 - ti) * tj),
            (1, 1, ti * tj),
        ):
            idx.append((i0 + di, j0 + dj, w))
        return idx

    def covers(self, z) -> np.ndarray:
        """Points whose bilinear stencil lies in the region."""
        z = np.asarray(z, dtype=complex)
        ok = np.ones(z.shape, dtype=bool)
        nx, ny = self.shape
        for i, j, w in self._corners(z):
            need = w > 1e-12
            inb = (i >= 0) & (i < nx) & (j >= 0) & (j < ny)
            ii = np.clip(i, 0, nx - 1)
            jj = np.clip(j, 0, ny - 1)
            ok &= ~need | (inb & self.region[ii, jj])
        return ok

    # serialization ----------------------------------------------------
    def descriptor(self) -> dict:
        return {
            "origin": [self.origin.real, self.origin.imag],
            "h": self.h,
            "shape": list(self.shape),
            "exclusion": [{"center": [c.real, c.imag], "radius": r} for c, r in self.exclusion],
        }


def interior_of(region: np.ndarray) -> np.ndarray:
    """Cells of ``region`` whose 4 neighbours are also in ``region``."""
    r = region
    out = r.copy()
    out[0, :] = out[-1, :] = False
    out[:, 0] = out[:, -1] = False
    out[1:-1, 1:-1] &= r[2:, 1:-1] & r[:-2, 1:-1] & r[1:-1, 2:] & r[1:-1, :-2]
    return out


def neighbour_sum(a: np.ndarray, step: int = 1) -> np.ndarray:
    """Sum of the four axis neighbours at distance ``step``; NaN at the rim."""
    out = np.full(a.shape, np.nan)
    s = step
    with np.errstate(invalid="ignore"):
        out[s:-s, s:-s] = a[2 * s :, s:-s] + a[: -2 * s, s:-s] + a[s:-s, 2 * s :] + a[s:-s, : -2 * s]
    return out


class ScalarField:
    """Grid-sampled extended-real function on a GridDomain region.

    ``values`` is NaN off the region; non-finite values inside the region
    are singular markers (normally -inf).  ``func``, when given, evaluates
    the same function exactly at arbitrary points and is preferred over
    bilinear interpolation.
    """

    def __init__(self, domain: GridDomain, values: np.ndarray, func: Callable | None = None):
        v = np.array(values, dtype=float)
        if v.shape != domain.shape:
            raise ValueError(f"values shape {v.shape} does not match domain {domain.shape}")
        v[~domain.region] = np.nan
        if np.isnan(v[domain.region]).any():
            raise ValueError("field has undefined values inside its region")
        v.flags.writeable = False
        self.domain = domain
        self.values = v
        self.func = func

    @classmethod
    def from_function(cls, domain: GridDomain, f: Callable, exact: bool = True) -> "ScalarField":
        vals = np.full(domain.shape, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals[domain.region] = f(domain.nodes[domain.region])
        return cls(domain, vals, func=f if exact else None)

    @classmethod
    def constant(cls, domain: GridDomain, c: float) -> "ScalarField":
        return cls.from_function(domain, lambda z: np.full(np.shape(z), float(c)))

    # inspection -------------------------------------------------------
    @property
    def h(self) -> float:
        return self.domain.h

    @property
    def singular(self) -> np.ndarray:
        """Region cells carrying a non-finite marker."""
        return self.domain.region & ~np.isfinite(self.values)

    @property
    def neg_inf(self) -> np.ndarray:
        return self.domain.region & (self.values == -np.inf)

    @property
    def finite(self) -> np.ndarray:
        return self.domain.region & np.isfinite(self.values)

    def at(self, z) -> float:
        """Grid value at the node nearest to ``z``."""
        i, j = self.domain.index(z)
        return float(self.values[i, j])

    def __call__(self, z):
        if self.func is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.asarray(self.func(np.asarray(z, dtype=complex)), dtype=float)
            return out[()] if out.ndim == 0 else out
        return self.interpolate(z)

    def interpolate(self, z):
        """Bilinear interpolation of the grid values; NaN off the region."""
        z = np.asarray(z, dtype=complex)
        dom = self.domain
        nx, ny = dom.shape
        acc = np.zeros(z.shape)
        ok = dom.covers(z)
        for i, j, w in dom._corners(z):
            ii = np.clip(i, 0, nx - 1)
            jj = np.clip(j, 0, ny - 1)
            v = self.values[ii, jj]
            with np.errstate(invalid="ignore"):
                acc = acc + np.where(w > 1e-12, w * np.nan_to_num(v, nan=0.0, posinf=np.inf, neginf=-np.inf), 0.0)
        acc = np.where(ok, acc, np.nan)
        return acc[()] if acc.ndim == 0 else acc

    # algebra ----------------------------------------------------------
    def _combine(self, other, op, fop):
        if isinstance(other, ScalarField):
            dom = _common_domain(self.domain, other.domain)
            a = _on(self, dom)
            b = _on(other, dom)
            with np.errstate(invalid="ignore"):
                vals = op(a, b)
            vals[~dom.region] = np.nan
            f = None
            if self.func is not None and other.func is not None:
                f1, f2 = self.func, other.func
                f = lambda z: fop(f1(z), f2(z))  # noqa: E731
            return ScalarField(dom, np.where(np.isnan(vals) & dom.region, np.inf, vals), f)
        c = float(other)
        with np.errstate(invalid="ignore"):
            vals = op(self.values, c)
        f = None
        if self.func is not None:
            f1 = self.func
            f = lambda z: fop(f1(z), c)  # noqa: E731
        return ScalarField(self.domain, vals, f)

    def __add__(self, other):
        return self._combine(other, np.add, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, _ext_sub, _ext_sub)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            raise TypeError("field products are not supported")
        c = float(c)
        if c == 0:
            return ScalarField.constant(self.domain, 0.0)
        return self._combine(c, np.multiply, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def maximum(self, other):
        return self._combine(other, np.fmax, np.fmax)

    def minimum(self, other):
        return self._combine(other, np.fmin, np.fmin)

    def positive_part(self) -> "ScalarField":
        return self.maximum(0.0)

    def restrict(self, domain: GridDomain) -> "ScalarField":
        """Same function on a sub-region (same lattice)."""
        vals = _on(self, domain)
        vals = np.where(domain.region, vals, np.nan)
        return ScalarField(domain, vals, self.func)

    def with_values(self, values: np.ndarray, func=None) -> "ScalarField":
        return ScalarField(self.domain, values, func)

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        markers = []
        flat = []
        for (i, j), v in np.ndenumerate(self.values):
            if np.isnan(v):
                flat.append(None)
            elif np.isinf(v):
                flat.append(None)
                markers.append([i, j, "-inf" if v < 0 else "inf"])
            else:
                flat.append(float(v))
        return {"domain": self.domain.descriptor(), "values": flat, "markers": markers}

    @classmethod
    def from_json(cls, data: dict) -> "ScalarField":
        d = data["domain"]
        shape = tuple(d["shape"])
        vals = np.array([np.nan if v is None else v for v in data["values"]], dtype=float).reshape(shape)
        for i, j, kind in data.get("markers", []):
            vals[i, j] = -np.inf if kind == "-inf" else np.inf
        mask = ~np.isnan(vals)
        excl = as_balls(d.get("exclusion", []))
        dom = GridDomain(complex(*d["origin"]), float(d["h"]), mask | in_balls(_nodes(d), excl), excl, None, False)
        return cls(dom, vals)


def _nodes(d: dict) -> np.ndarray:
    nx, ny = d["shape"]
    o = complex(*d["origin"])
    return o + d["h"] * np.arange(nx)[:, None] + 1j * d["h"] * np.arange(ny)[None, :]


def _ext_sub(a, b):
    # -inf - (-inf) is left undefined (+inf marks "outside dom M")
    with np.errstate(invalid="ignore"):
        out = np.subtract(a, b)
    return np.where(np.isnan(out) & ~np.isnan(a) & ~np.isnan(b), np.inf, out)


def _common_domain(a: GridDomain, b: GridDomain) -> GridDomain:
    if a is b:
        return a
    di, dj = a.offset_to(b)
    if (di, dj) == (0, 0) and a.shape == b.shape:
        region = a.region & b.region
        if (region == a.region).all():
            return a
        if (region == b.region).all():
            return b
        return GridDomain(a.origin, a.h, a.mask & b.mask, a.exclusion or b.exclusion, a.model, False)
    # embed b into a's lattice box
    mb = np.zeros(a.shape, dtype=bool)
    _paste(mb, b.mask, di, dj)
    return GridDomain(a.origin, a.h, a.mask & mb, a.exclusion or b.exclusion, a.model, False)


def _paste(dst: np.ndarray, src: np.ndarray, di: int, dj: int) -> None:
    nx, ny = dst.shape
    sx, sy = src.shape
    i0, j0 = max(di, 0), max(dj, 0)
    i1, j1 = min(di + sx, nx), min(dj + sy, ny)
    if i1 <= i0 or j1 <= j0:
        return
    dst[i0:i1, j0:j1] = src[i0 - di : i1 - di, j0 - dj : j1 - dj]


def _on(f: ScalarField, dom: GridDomain) -> np.ndarray:
    """Values of ``f`` on the lattice box of ``dom`` (NaN where undefined)."""
    if f.domain is dom or (f.domain.shape == dom.shape and f.domain.offset_to(dom) == (0, 0)):
        return np.array(f.values)
    out = np.full(dom.shape, np.nan)
    di, dj = dom.offset_to(f.domain)
    _paste(out, f.values, di, dj)
    return out


def sample(domain: GridDomain, f: Callable) -> ScalarField:
    """Shorthand for :meth:`ScalarField.from_function`."""
    return ScalarField.from_function(domain, f)


def points_array(points: Sequence) -> np.ndarray:
    """Accept complex numbers or [x, y] pairs."""
    out = []
    for p in points:
        if isinstance(p, (list, tuple)):
            out.append(complex(p[0], p[1]))
        else:
            out.append(complex(p))
    return np.array(out, dtype=complex)
