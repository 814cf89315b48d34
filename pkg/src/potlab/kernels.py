"""Fundamental kernels, normalization constants and inversion.

Points of the plane are complex numbers; points of R^m (m >= 3) are
length-m sequences.  The point at infinity of the one-point
compactification is the singleton :data:`INFINITY`.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


class _Infinity:
    """The added point of the one-point compactification."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def _gamma_half(m: int) -> float:
    # Gamma(m/2) from the half-integer closed forms
    if m % 2 == 0:
        return float(math.factorial(m // 2 - 1))
    k = (m - 1) // 2
    # Gamma(k + 1/2) = (2k)! / (4^k k!) * sqrt(pi)
    return math.factorial(2 * k) / (4**k * math.factorial(k)) * math.sqrt(math.pi)


def _check_dim(m: int) -> None:
    if int(m) != m or m < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {m!r}")


def kernel_h(m: int, t):
    """Dimension-indexed kernel: t, log|t|, -|t|^(2-m).

    Works elementwise on arrays; returns -inf at t = 0 for m >= 2.
    """
    _check_dim(m)
    t = np.asarray(t, dtype=float)
    if m == 1:
        out = t.copy()
    else:
        a = np.abs(t)
        with np.errstate(divide="ignore"):
            if m == 2:
                out = np.log(a)
            else:
                out = -np.power(a, 2.0 - m)
    return out[()] if out.ndim == 0 else out


def sphere_constant(m: int) -> float:
    """Area of the unit (m-1)-sphere times max(1, m-2)."""
    _check_dim(m)
    if m <= 16:
        gamma = _gamma_half(m)
    else:
        gamma = math.gamma(m / 2)
    return 2.0 * math.pi ** (m / 2) * max(1, m - 2) / gamma


def ball_volume_constant(p: int) -> float:
    """Volume of the unit ball in R^p, with b_0 = 1."""
    if int(p) != p or p < 0:
        raise ValueError(f"p must be an integer >= 0, got {p!r}")
    if p == 0:
        return 1.0
    # s_{p-1} is sphere_constant(p)
    return sphere_constant(p) / (p * max(1, p - 2))


def inversion(x, center=0j):
    """Inversion in the unit sphere about ``center``.

    ``center`` maps to :data:`INFINITY` and back.  Complex scalars are
    treated as planar points; sequences as points of R^m.
    """
    if x is INFINITY:
        return center
    if isinstance(x, (complex, float, int, np.number)) and np.ndim(x) == 0:
        y = complex(x) - complex(center)
        if y == 0:
            return INFINITY
        return complex(center) + y / abs(y) ** 2
    xa = np.asarray(x, dtype=float)
    ca = _space_center(center, xa.shape[-1])
    y = xa - ca
    n2 = float(np.dot(y, y))
    if n2 == 0.0:
        return INFINITY
    return ca + y / n2


def _space_center(center, m: int) -> np.ndarray:
    # a planar default center stands for the origin of R^m
    if np.ndim(center) == 0:
        if complex(center) != 0:
            raise ValueError("center in R^m must be a length-m sequence")
        return np.zeros(m)
    return np.asarray(center, dtype=float)


def _invert_points(z: np.ndarray, center: complex) -> np.ndarray:
    y = z - center
    with np.errstate(divide="ignore", invalid="ignore"):
        return center + y / np.abs(y) ** 2


def kelvin_function(u: Callable, m: int = 2, center=0j) -> Callable:
    """Kelvin transform of a callable: u*(y) = |y - c|^(2-m) u(y*).

    For m = 2 the callable takes complex arrays; for m >= 3 it takes
    arrays of shape (..., m).
    """
    _check_dim(m)
    if m < 2:
        raise ValueError("Kelvin transform requires m >= 2")
    if m == 2:
        c = complex(center)

        def star(y):
            y = np.asarray(y, dtype=complex)
            return u(_invert_points(y, c))

        return star

    c = _space_center(center, m)

    def star_m(y):
        y = np.asarray(y, dtype=float)
        d = y - c
        n2 = np.sum(d * d, axis=-1)
        x = c + d / n2[..., None]
        return np.power(n2, (2.0 - m) / 2.0) * u(x)

    return star_m


def kelvin_transform(u, m: int = 2, center=0j, target=None):
    """Kelvin transform of a grid field or a callable.

    For a :class:`~potlab.grid.ScalarField` the result is sampled on
    ``target`` (a GridDomain); cells whose preimage falls outside the
    field's region are left undefined.  The field's region must stay
    clear of the inversion center.
    """
    from .grid import GridDomain, ScalarField

    if not isinstance(u, ScalarField):
        return kelvin_function(u, m, center)
    if m != 2:
        raise ValueError("grid fields are planar; use a callable for m >= 3")
    c = complex(center)
    dom = u.domain
    reg = dom.region
    d = np.abs(dom.nodes[reg] - c)
    if d.size == 0 or d.min() <= dom.h:
        raise ValueError("field region touches the inversion center")
    if target is None:
        pts = _invert_points(dom.nodes[reg], c)
        lo = complex(pts.real.min(), pts.imag.min())
        hi = complex(pts.real.max(), pts.imag.max())
        target = GridDomain.box(lo, hi, dom.h)
    star = kelvin_function(u, 2, c)
    pre = _invert_points(target.nodes, c)
    inside = dom.covers(pre) & target.mask
    vals = np.full(target.shape, np.nan)
    with np.errstate(invalid="ignore"):
        vals[inside] = star(target.nodes[inside])
    return ScalarField(target.with_mask(inside), vals, func=star)
