"""Zero divisors of holomorphic functions of one variable.

Divisors are inputs; no root finding is done.  The Poincare-Lelong check
recovers the divisor from the Riesz charge of log|f| as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fields import RieszCharge, riesz_measure
from .grid import GridDomain, ScalarField, as_balls, in_balls
from .kernels import ball_volume_constant, sphere_constant


@dataclass(frozen=True)
class ZeroDivisor:
    """Finite list of (point, multiplicity) with distinct points."""

    points: tuple = ()
    mults: tuple = ()

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        ms = tuple(int(m) for m in self.mults)
        if len(pts) != len(ms):
            raise ValueError("points and multiplicities differ in length")
        if any(m <= 0 for m in ms):
            raise ValueError("multiplicities must be positive integers")
        if len(set(pts)) != len(pts):
            raise ValueError("divisor points must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mults", ms)

    @classmethod
    def from_pairs(cls, pairs) -> "ZeroDivisor":
        pairs = list(pairs)
        return cls(tuple(p for p, _ in pairs), tuple(m for _, m in pairs))

    @property
    def entries(self) -> list:
        return list(zip(self.points, self.mults))

    @property
    def degree(self) -> int:
        return sum(self.mults)

    def __len__(self) -> int:
        return len(self.points)

    def __le__(self, other: "ZeroDivisor") -> bool:
        """Subdivisor relation: entrywise multiplicities at most those of other."""
        big = dict(other.entries)
        return all(m <= big.get(p, 0) for p, m in self.entries)

    def __add__(self, other: "ZeroDivisor") -> "ZeroDivisor":
        acc = dict(self.entries)
        for p, m in other.entries:
            acc[p] = acc.get(p, 0) + m
        return ZeroDivisor(tuple(acc), tuple(acc.values()))

    def scaled(self, num: int, den: int = 1) -> "ZeroDivisor":
        """Multiplicities m*num//den, dropping entries that reach 0."""
        e = [(p, m * num // den) for p, m in self.entries]
        e = [(p, m) for p, m in e if m > 0]
        return ZeroDivisor.from_pairs(e)

    def inside(self, model) -> bool:
        return bool(np.all(model.contains(np.array(self.points, dtype=complex)))) if self.points else True

    def to_json(self) -> dict:
        return {"roots": [[p.real, p.imag] for p in self.points], "mults": list(self.mults)}

    @classmethod
    def from_json(cls, d: dict) -> "ZeroDivisor":
        return cls(tuple(complex(x, y) for x, y in d.get("roots", [])), tuple(d.get("mults", [])))


@dataclass(frozen=True)
class HoloFunction:
    """f = lead * exp(p(z)) * prod (z - a)^m, or a finite Blaschke product.

    ``kind`` is "polynomial", "blaschke" or "exp".  ``coeffs`` are the
    coefficients of p in increasing degree (only used by "exp").
    """

    kind: str
    roots: tuple = ()
    mults: tuple = ()
    lead: complex = 1.0
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("polynomial", "blaschke", "exp"):
            raise ValueError(f"unknown kind {self.kind!r}")
        roots = tuple(complex(r) for r in self.roots)
        mults = tuple(int(m) for m in self.mults) if self.mults else (1,) * len(roots)
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "mults", mults)
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if complex(self.lead) == 0:
            raise ValueError("f must not vanish identically")
        if self.kind == "blaschke" and any(abs(a) >= 1 for a in roots):
            raise ValueError("Blaschke roots must lie in the unit disk")

    @classmethod
    def polynomial(cls, roots, mults=(), lead=1.0) -> "HoloFunction":
        return cls("polynomial", tuple(roots), tuple(mults), lead)

    @classmethod
    def blaschke(cls, roots, mults=(), lead=1.0) -> "HoloFunction":
        if abs(abs(complex(lead)) - 1) > 1e-12:
            raise ValueError("Blaschke factor must be unimodular")
        return cls("blaschke", tuple(roots), tuple(mults), lead)

    @classmethod
    def exp_harmonic(cls, coeffs, roots=(), mults=(), lead=1.0) -> "HoloFunction":
        return cls("exp", tuple(roots), tuple(mults), lead, tuple(coeffs))

    @property
    def divisor(self) -> ZeroDivisor:
        return ZeroDivisor(self.roots, self.mults)

    def _factor(self, z, a):
        if self.kind == "blaschke":
            return (z - a) / (1 - np.conj(a) * z)
        return z - a

    def log_abs(self, z):
        """log|f(z)|, -inf at the roots."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, math.log(abs(complex(self.lead))))
        with np.errstate(divide="ignore"):
            for a, m in zip(self.roots, self.mults):
                out = out + m * np.log(np.abs(self._factor(z, a)))
        if self.coeffs:
            out = out + np.real(np.polyval(self.coeffs[::-1], z))
        return out[()] if out.ndim == 0 else out

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, complex(self.lead))
        for a, m in zip(self.roots, self.mults):
            out = out * self._factor(z, a) ** m
        if self.coeffs:
            out = out * np.exp(np.polyval(self.coeffs[::-1], z))
        return out[()] if out.ndim == 0 else out

    def field(self, domain: GridDomain) -> ScalarField:
        return ScalarField.from_function(domain, self.log_abs)

    def to_json(self) -> dict:
        d = {
            "kind": self.kind,
            "roots": [[a.real, a.imag] for a in self.roots],
            "mults": list(self.mults),
            "lead": [complex(self.lead).real, complex(self.lead).imag],
        }
        if self.coeffs:
            d["coeffs"] = [[c.real, c.imag] for c in self.coeffs]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "HoloFunction":
        pair = lambda p: complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p)
        return cls(
            d["kind"],
            tuple(pair(p) for p in d.get("roots", [])),
            tuple(d.get("mults", [])),
            pair(d.get("lead", 1.0)),
            tuple(pair(c) for c in d.get("coeffs", [])),
        )


def counting_measure(d: ZeroDivisor, domain: GridDomain) -> RieszCharge:
    """Atoms of mass equal to the multiplicity at each divisor point."""
    return RieszCharge.from_atoms(domain, list(d.points), [float(m) for m in d.mults])


def min_separation(points: Sequence) -> float:
    p = np.asarray(points, dtype=complex)
    if p.size < 2:
        return math.inf
    dist = np.abs(p[:, None] - p[None, :])
    dist[np.diag_indices(p.size)] = np.inf
    return float(dist.min())


@dataclass
class PLResult:
    residual: float
    recovered: list
    expected: list
    total: float
    charge: RieszCharge = field(repr=False)


def poincare_lelong(f: HoloFunction, grid: GridDomain, radius: float | None = None) -> PLResult:
    """Riesz charge of log|f| compared with the counting measure of its zeros.

    Recovered mass per root is the charge in the open ball of ``radius``
    (default 4h) around it.  With no zeros the residual is the absolute
    total mass.
    """
    h = grid.h
    roots = list(f.roots)
    if min_separation(roots) < 8 * h:
        raise ValueError("roots closer than 8h cannot be resolved on this grid")
    r = 4 * h if radius is None else radius
    u = f.field(grid)
    nu = riesz_measure(u)
    rec = [nu.ball_mass(a, r) for a in roots]
    exp = [float(m) for m in f.mults]
    total = nu.total()
    if roots:
        res = max(abs(a - b) for a, b in zip(rec, exp))
    else:
        res = abs(total)
    return PLResult(float(res), rec, exp, float(total), nu)


def poincare_lelong_residual(f: HoloFunction, grid: GridDomain) -> float:
    """max over roots of |recovered mass - multiplicity|."""
    return poincare_lelong(f, grid).residual


def weighted_zero_sum(d: ZeroDivisor, v, S=(), method: str = "bilinear") -> float:
    """Sum of mult * v(point) over divisor points outside S.

    ``method`` is "bilinear" (grid interpolation) or "exact" (the field's
    evaluator, falling back to interpolation when it has none).
    """
    fld = v.field if hasattr(v, "field") and isinstance(v.field, ScalarField) else v
    balls = as_balls(S)
    pts = np.array(d.points, dtype=complex)
    if pts.size == 0:
        return 0.0
    keep = ~in_balls(pts, balls) if balls else np.ones(pts.size, bool)
    pts = pts[keep]
    ms = np.array(d.mults, dtype=float)[keep]
    if pts.size == 0:
        return 0.0
    if method == "exact" and fld.func is not None:
        vals = np.asarray(fld(pts), dtype=float)
    elif method in ("bilinear", "exact"):
        vals = np.asarray(fld.interpolate(pts), dtype=float)
    else:
        raise ValueError(f"unknown method {method!r}")
    bad = ~np.isfinite(vals)
    if bad.any():
        raise ValueError(f"test function undefined at divisor points {pts[bad].tolist()}")
    return float(np.sum(ms * vals))


def zero_set_constants(n: int) -> dict:
    """Normalization chain for zero sets in C^n: b_{2n-2}, s_{2n-1} and
    their ratio 2 pi max(1, 2n - 2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    b = ball_volume_constant(2 * n - 2)
    s = sphere_constant(2 * n)
    return {"n": n, "b": b, "s": s, "ratio": s / b}
