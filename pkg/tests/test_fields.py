import numpy as np
import pytest

from frozen import FROZEN
from potlab.fields import (
    RieszCharge,
    ball_average,
    ball_mass,
    check_subharmonic,
    dom_check,
    hahn_jordan,
    make_delta_sbh,
    riesz_measure,
    s_normalizer,
    sphere_average,
    violation_mask,
)
from potlab.green import ModelDomain
from potlab.grid import ScalarField


@pytest.fixture(scope="module")
def g128():
    return ModelDomain.disk(0, 1).grid(1 / 128)


def test_s_normalizer():
    assert s_normalizer(2) == pytest.approx(2 * np.pi)


def test_harmonic_field_has_no_charge(g128):
    u = ScalarField.from_function(g128, lambda z: (z**3).real - z.imag)
    c = riesz_measure(u)
    assert c.points.size == 0
    assert np.abs(c.density).max() < 1e-10


def test_quadratic_density(g128):
    # Laplacian of |z|^2 is 4; the charge of the unit disk is 4 pi / 2 pi = 2
    u = ScalarField.from_function(g128, lambda z: np.abs(z) ** 2)
    c = riesz_measure(u)
    h = g128.h
    assert np.allclose(c.density[g128.interior], 4 * h * h / (2 * np.pi))
    assert ball_mass(c, 0, 0.9) == pytest.approx(2 * 0.81, rel=5e-3)


@pytest.mark.parametrize("a", [0.3 + 0.2j, 0.1234 + 0.0567j, -0.4 + 0.01j])
def test_log_atom_mass_and_location(g128, a):
    u = ScalarField.from_function(g128, lambda z: np.log(np.abs(z - a)))
    c = riesz_measure(u)
    assert c.points.size == 1
    assert c.masses[0] == pytest.approx(1.0, abs=1e-3)
    assert abs(c.points[0] - a) < 0.25 * g128.h
    assert np.abs(c.density).max() < 1e-3


def test_multiplicity_two(g128):
    u = ScalarField.from_function(g128, lambda z: 2 * np.log(np.abs(z + 0.25j)))
    c = riesz_measure(u)
    assert c.atom_at(-0.25j) == pytest.approx(2.0, abs=1e-3)


def test_charge_algebra(g128):
    a = RieszCharge.from_atoms(g128, [0.1, -0.2j], [1.0, -0.5])
    b = RieszCharge.from_atoms(g128, [0.1 + 1e-4], [2.0])
    s = a + b
    assert s.points.size == 2
    assert s.atom_at(0.1) == pytest.approx(3.0)
    assert (a - a).points.size == 0
    assert s.total_variation() == pytest.approx(3.5)
    p, m = hahn_jordan(a)
    assert p.total() == pytest.approx(1.0) and m.total() == pytest.approx(0.5)
    assert ball_mass(a, 0, 0.15) == pytest.approx(1.0)
    assert a.restrict(lambda z: np.abs(z) < 0.15).total() == pytest.approx(1.0)
    assert a.without_atoms_near(0.1, 0.01).total() == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        ball_mass(a, 0, 0)
    with pytest.raises(ValueError):
        RieszCharge(g128, [0.0, 1.0], [1.0])


def test_hahn_jordan_density_split(g128):
    d = np.zeros(g128.shape)
    d[10, 10], d[20, 20] = 0.3, -0.7
    p, m = hahn_jordan(RieszCharge(g128, density=d))
    assert p.total() == pytest.approx(0.3) and m.total() == pytest.approx(0.7)
    assert not np.any((p.density > 0) & (m.density > 0))


def test_uniform_disk_potential(g128):
    # uniform charge of mass 2 on the unit disk has potential |z|^2 - 1 inside
    u = ScalarField.from_function(g128, lambda z: np.abs(z) ** 2)
    c = riesz_measure(u)
    z = np.array([0.0, 0.3 + 0.4j, -0.6j])
    assert np.allclose(c.potential(z), np.abs(z) ** 2 - 1, atol=5e-3)


def test_atom_potential_is_log(g128):
    c = RieszCharge.from_atoms(g128, [0.2j], [1.5])
    z = np.array([0.5, -0.3 + 0.1j])
    assert np.allclose(c.potential(z), 1.5 * np.log(np.abs(z - 0.2j)))


def test_integrate_and_pole_regularization(g128):
    h = g128.h
    c = RieszCharge.from_atoms(g128, [0.25], [2.0])
    assert c.integrate(lambda z: np.abs(z)) == pytest.approx(0.5)
    d = np.zeros(g128.shape)
    i, j = g128.index(0)
    d[i, j] = 1.0
    cell = RieszCharge(g128, density=d)
    L = ScalarField.from_function(g128, lambda z: -np.log(np.abs(z)))
    v = cell.integrate(L)
    # mean of -log|z| over the square cell of side h
    expect = -(np.log(h) + FROZEN["square_log_mean"])
    assert v == pytest.approx(expect, rel=1e-12)
    assert cell.integrate(L, regularize_pole=False) == np.inf


def test_dom_check():
    g = ModelDomain.disk(0, 1).grid(1 / 128)
    c = RieszCharge.from_atoms(g, [0.1], [1.0])
    assert not dom_check(c, 0.1, 0.2)
    assert dom_check(c, 0.5, 0.2)
    smooth = riesz_measure(ScalarField.from_function(g, lambda z: np.abs(z) ** 2))
    assert dom_check(smooth, 0.2, 0.3)
    with pytest.raises(ValueError):
        dom_check(c, 0, 0.2, m=3)


def test_averages_against_oracle():
    big = ModelDomain.disk(0, 1.25).grid(1 / 128)
    L = ScalarField.from_function(big, lambda z: np.log(np.abs(z - 0.5)))
    assert sphere_average(L, 0, 1.0, K=4096) == pytest.approx(FROZEN["avg_log_half_r1"], abs=1e-12)
    Q = ScalarField.from_function(big, lambda z: np.abs(z) ** 2)
    assert sphere_average(Q, 0.1, 0.5) == pytest.approx(FROZEN["avg_abs2_r05"], abs=1e-12)
    assert ball_average(Q, 0, 0.5) == pytest.approx(0.125, rel=1e-3)
    with pytest.raises(ValueError):
        sphere_average(Q, 0, 1.3)
    with pytest.raises(ValueError):
        ball_average(Q, 0, -1)


def test_sub_mean_value_for_log(g128):
    L = ScalarField.from_function(g128, lambda z: np.log(np.abs(z - 0.2)))
    assert L(0.2 + 0.3j) <= sphere_average(L, 0.2 + 0.3j, 0.4)
    assert L(0.2 + 0.0j) <= ball_average(L, 0.2, 0.3)


def test_subharmonic_detection(g128, green0):
    ok = [
        lambda z: np.log(np.abs(z - 0.3)),
        lambda z: np.maximum(np.log(np.abs(z - 0.3)), np.log(np.abs(z + 0.2j))),
        lambda z: np.abs(z) ** 2 + z.real,
        lambda z: np.log(np.abs(z - 0.1234 - 0.0567j)),
    ]
    for f in ok:
        assert check_subharmonic(ScalarField.from_function(g128, f)) == []
    bad = ScalarField.from_function(g128, lambda z: -np.abs(z) ** 2)
    assert len(check_subharmonic(bad)) > 0.9 * g128.interior.sum() - 2000
    assert check_subharmonic(green0) == []


def test_superharmonic_pole_is_flagged(g128):
    g = ScalarField.from_function(g128, lambda z: -np.log(np.abs(z)))
    m = violation_mask(g)
    assert m.any()


def test_plus_inf_is_violation(g128):
    vals = np.where(g128.region, 0.0, np.nan)
    vals[g128.index(0.25)] = np.inf
    assert violation_mask(ScalarField(g128, vals)).any()


def test_exclude_argument(g128):
    bad = ScalarField.from_function(g128, lambda z: -np.abs(z) ** 2)
    assert check_subharmonic(bad, exclude=np.ones(g128.shape, bool)) == []


def test_make_delta_sbh(g128):
    u1 = ScalarField.from_function(g128, lambda z: np.log(np.abs(z - 0.3)) + 0.5 * np.abs(z) ** 2)
    u2 = ScalarField.from_function(g128, lambda z: np.log(np.abs(z + 0.4)))
    M = make_delta_sbh(u1, u2)
    assert M.value(0.0) == pytest.approx(np.log(0.3) - np.log(0.4))
    assert M.value(0.3) == -np.inf and M.value(-0.4) == np.inf
    assert not M.in_dom(0.3) and not M.in_dom(-0.4)
    assert M.in_dom(0.1j)
    assert M.positive.atom_at(0.3) == pytest.approx(1.0, abs=1e-3)
    assert M.negative.atom_at(-0.4) == pytest.approx(1.0, abs=1e-3)
    assert M.charge.total() == pytest.approx(1.0 - 1.0 + 1.0, rel=0.02)
    with pytest.raises(ValueError):
        make_delta_sbh(-u1, u2)
