"""Jensen measures, their logarithmic potentials and the Poisson-Jensen identity.

Poles must sit on grid nodes: the potential's singular cell is then a
single +inf marker, which the Riesz extraction resolves as an atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fields import RieszCharge, atom_potential, check_subharmonic, riesz_measure, sphere_average
from .green import BoundaryMeasure
from .grid import GridDomain, ScalarField

TESTBANK_VERSION = "v1"


@dataclass(frozen=True)
class JensenMeasure:
    """Positive measure with a base point x0."""

    x0: complex
    charge: RieszCharge

    @property
    def domain(self) -> GridDomain:
        return self.charge.domain

    @property
    def mass(self) -> float:
        return self.charge.total()

    def integrate(self, f) -> float:
        return self.charge.integrate(f)

    @classmethod
    def dirac(cls, x0, domain: GridDomain) -> "JensenMeasure":
        return cls(complex(x0), RieszCharge.from_atoms(domain, [complex(x0)], [1.0]))

    @classmethod
    def circle(cls, x0, r: float, domain: GridDomain, K: int = 1024, center=None) -> "JensenMeasure":
        """Uniform probability on the circle |z - center| = r (center defaults to x0)."""
        c = complex(x0) if center is None else complex(center)
        th = 2 * math.pi * np.arange(K) / K
        pts = c + r * np.exp(1j * th)
        return cls(complex(x0), RieszCharge.from_atoms(domain, pts, np.full(K, 1.0 / K)))

    @classmethod
    def from_boundary(cls, hm: BoundaryMeasure, domain: GridDomain) -> "JensenMeasure":
        return cls(hm.x0, hm.to_charge(domain))

    def mix(self, other: "JensenMeasure", t: float) -> "JensenMeasure":
        """t * self + (1 - t) * other (same base point)."""
        if abs(self.x0 - other.x0) > 1e-12:
            raise ValueError("measures have different base points")
        return JensenMeasure(self.x0, self.charge * t + other.charge * (1.0 - t))

    def to_json(self) -> dict:
        d = self.charge.to_json()
        d["x0"] = [self.x0.real, self.x0.imag]
        return d


@dataclass(frozen=True)
class JensenPotential:
    field: ScalarField
    x0: complex
    ratio: float

    def __call__(self, z):
        return self.field(z)

    def value_at_infinity(self) -> float:
        return 0.0


# --------------------------------------------------------------------------
# test bank


@dataclass(frozen=True)
class TestField:
    name: str
    func: Callable
    harmonic: bool = False

    __test__ = False  # not a pytest class


def _log_at(a: complex) -> Callable:
    def f(z):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(np.asarray(z, complex) - a))

    return f


def default_testbank() -> list:
    """The fixed ten-field bank used by the Jensen checks (version v1)."""
    bank = [
        TestField("re_z", lambda z: np.real(z), True),
        TestField("im_z", lambda z: np.imag(z), True),
        TestField("re_z2", lambda z: np.real(np.asarray(z, complex) ** 2), True),
        TestField("im_z2", lambda z: np.imag(np.asarray(z, complex) ** 2), True),
        TestField("abs_z2", lambda z: np.abs(z) ** 2),
    ]
    for name, a in (("log_p05", 0.5), ("log_p05i", 0.5j), ("log_m05", -0.5), ("log_m05i", -0.5j)):
        bank.append(TestField(name, _log_at(a)))
    la, lb = _log_at(0.4), _log_at(-0.4)
    bank.append(TestField("max_log_pm04", lambda z: np.maximum(la(z), lb(z))))
    return bank


def testbank_subharmonic(bank: Sequence[TestField], domain: GridDomain) -> dict:
    """Violation counts of each bank member sampled on ``domain``."""
    return {t.name: len(check_subharmonic(ScalarField.from_function(domain, t.func))) for t in bank}


@dataclass
class JensenReport:
    verdict: bool
    margins: dict
    mass: float
    tolerance: float
    version: str = TESTBANK_VERSION
    harmonic_max: float = 0.0


def is_jensen(mu: JensenMeasure, testbank: Sequence[TestField] | None = None, tol: float = 1e-6) -> JensenReport:
    """Check u(x0) <= integral of u against mu over a bank of subharmonic u."""
    bank = default_testbank() if testbank is None else list(testbank)
    margins = {}
    hmax = 0.0
    for t in bank:
        ux0 = float(t.func(np.array([mu.x0]))[0])
        with np.errstate(invalid="ignore"):
            integral = mu.integrate(t.func)
        m = integral - ux0 if np.isfinite(ux0) else (np.inf if ux0 == -np.inf else -np.inf)
        if np.isnan(m):
            m = -np.inf
        margins[t.name] = float(m)
        if t.harmonic:
            hmax = max(hmax, abs(m))
    verdict = all(m >= -tol for m in margins.values())
    return JensenReport(verdict, margins, mu.mass, tol, harmonic_max=hmax)


# --------------------------------------------------------------------------
# potentials


def _split_at_pole(mu: JensenMeasure):
    c = mu.charge
    off = np.abs(c.points - mu.x0) > 1e-12
    return c.points[off], c.masses[off], c


def log_potential(mu: JensenMeasure, domain: GridDomain | None = None) -> JensenPotential:
    """V(y) = integral of log|y - x| - log|y - x0| against mu."""
    x0 = mu.x0
    pts, ms, c = _split_at_pole(mu)
    dom = domain if domain is not None else c.domain.full()
    dens_mass = float(c.density.sum()) if c.density is not None else 0.0
    pole_mass = float(ms.sum()) + dens_mass
    if c.density is not None and np.any(c.density):
        dens_field = ScalarField(c.domain.full(), c.density_potential)
    else:
        dens_field = None

    def V(z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape)
        if pts.size:
            out += atom_potential(pts, ms, z)
        if dens_field is not None:
            out += dens_field.interpolate(z)
        if pole_mass != 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                out -= pole_mass * np.log(np.abs(z - x0))
        out = np.where(z == x0, np.inf if pole_mass > 0 else 0.0, out)
        return out[()] if out.ndim == 0 else out

    vals = np.full(dom.shape, np.nan)
    reg = dom.region
    nodes = dom.nodes[reg]
    acc = np.zeros(nodes.shape)
    if pts.size:
        acc += atom_potential(pts, ms, nodes)
    if dens_field is not None:
        acc += dens_field.interpolate(nodes)
    with np.errstate(divide="ignore", invalid="ignore"):
        acc -= pole_mass * np.log(np.abs(nodes - x0))
    acc = np.where(nodes == x0, np.inf if pole_mass > 0 else 0.0, acc)
    vals[reg] = acc
    return JensenPotential(ScalarField(dom, vals, V), x0, pole_mass)


def _shell_log(charge: RieszCharge, x0: complex, r: float) -> float:
    """Integral of log max(r, |y - x0|) against the charge."""
    total = 0.0
    if charge.points.size:
        d = np.maximum(np.abs(charge.points - x0), r)
        total += float(np.sum(charge.masses * np.log(d)))
    if charge.density is not None:
        nz = charge.density != 0
        d = np.maximum(np.abs(charge.domain.nodes[nz] - x0), r)
        total += float(np.sum(charge.density[nz] * np.log(d)))
    return total


def estimate_normalization(
    V: ScalarField,
    x0,
    scales: Sequence[int] = (8, 16, 32),
    K: int = 256,
    charge: RieszCharge | None = None,
) -> float:
    """Coefficient c in V(x) ~ -c log|x - x0| from circle averages.

    Circle averages of V at r = s*h are fitted against -log r.  The
    average also carries the integral of log max(r, |y - x0|) over the
    charge off x0; when ``charge`` is given that term is removed, so the
    fit is exact even if the circles cross the support.
    """
    x0 = complex(x0)
    h = V.domain.h
    r = np.array([s * h for s in scales], dtype=float)
    a = np.array([sphere_average(V, x0, rr, K) for rr in r])
    if charge is not None:
        a = a - np.array([_shell_log(charge, x0, rr) for rr in r])
    X = np.vstack([-np.log(r), np.ones_like(r)]).T
    coef, *_ = np.linalg.lstsq(X, a, rcond=None)
    return float(coef[0])


def duality_inverse(V, x0=None, tol: float = 0.02, scales: Sequence[int] = (8, 16, 32)) -> JensenMeasure:
    """Jensen measure of a Jensen potential: its Riesz charge off x0
    plus (1 - ratio) at x0, with the ratio estimated from V."""
    if isinstance(V, JensenPotential):
        field_, x0 = V.field, V.x0
    else:
        field_ = V
        if x0 is None:
            raise ValueError("x0 is required for a bare field")
    x0 = complex(x0)
    if not field_.domain.is_node(x0):
        raise ValueError("the pole must be a grid node")
    charge = riesz_measure(field_).without_atoms_near(x0, field_.domain.h)
    ratio = estimate_normalization(field_, x0, scales, charge=charge)
    if ratio > 1 + tol:
        raise ValueError(f"normalization ratio {ratio:.4f} exceeds 1: not a Jensen potential")
    coef = 1.0 - min(ratio, 1.0)
    if coef > 0:
        charge = charge + RieszCharge.from_atoms(charge.domain, [x0], [coef])
    return JensenMeasure(x0, charge)


@dataclass
class PJResult:
    residual: float
    u_x0: float
    v_integral: float
    u_integral: float


def poisson_jensen_residual(u: ScalarField, mu: JensenMeasure, V: ScalarField | None = None, nu: RieszCharge | None = None) -> PJResult:
    """|u(x0) + integral of V_mu dnu_u - integral of u dmu|.

    Without an explicit ``V`` the middle term is computed by Fubini as
    the integral of U_nu against mu minus |mu| U_nu(x0), where U_nu is
    the logarithmic potential of nu_u.
    """
    ux0 = float(u(mu.x0))
    if ux0 == -np.inf or np.isnan(ux0):
        raise ValueError("u(x0) must be finite")
    nu = riesz_measure(u) if nu is None else nu
    ui = mu.integrate(u)
    if V is not None:
        vi = nu.integrate(V)
    else:
        vi = mu.integrate(nu.potential) - mu.mass * float(nu.potential(mu.x0))
    return PJResult(abs(ux0 + vi - ui), ux0, vi, ui)


def weak_error(mu: JensenMeasure, nu: JensenMeasure, testbank: Sequence[TestField] | None = None) -> float:
    """Largest relative gap between test integrals of two measures."""
    bank = default_testbank() if testbank is None else testbank
    err = 0.0
    for t in bank:
        a = mu.integrate(t.func)
        b = nu.integrate(t.func)
        err = max(err, abs(a - b) / max(1.0, abs(a)))
    return err
