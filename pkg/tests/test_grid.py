import json

import numpy as np
import pytest

from potlab.green import ModelDomain
from potlab.grid import GridDomain, ScalarField, as_balls, in_balls, neighbour_sum


def test_box_snaps_to_lattice():
    g = GridDomain.box(-0.3 - 0.2j, 0.31 + 0.2j, 0.25)
    assert g.origin == pytest.approx(-0.5 - 0.25j)
    assert g.shape == (5, 3)
    assert g.is_node(0.25 + 0.25j)
    assert not g.is_node(0.1)


def test_common_lattice_and_offsets():
    a = GridDomain.box(-1 - 1j, 1 + 1j, 0.125)
    b = GridDomain.box(-0.5 - 0.5j, 0.5 + 0.5j, 0.125)
    assert a.offset_to(b) == (4, 4)
    c = GridDomain(0.01 + 0j, 0.125, np.ones((3, 3), bool), check_connected=False)
    with pytest.raises(ValueError):
        a.offset_to(c)
    with pytest.raises(ValueError):
        a.offset_to(GridDomain.box(0, 1, 0.1))


def test_disconnected_mask_rejected():
    m = np.zeros((7, 7), bool)
    m[1, 1] = m[5, 5] = True
    with pytest.raises(ValueError):
        GridDomain(0j, 1.0, m)


def test_exclusion_must_be_compact():
    D = ModelDomain.disk(0, 1)
    with pytest.raises(ValueError):
        D.grid(1 / 32, exclusion=[(0.9, 0.2)])


def test_region_area_and_collars(punctured):
    area = np.pi * (1 - 0.25)
    assert punctured.area == pytest.approx(area, rel=0.01)
    ring0 = punctured.collar(0)
    assert ring0.any()
    r = np.abs(punctured.nodes[ring0])
    assert r.min() > 1 - 2 * punctured.h and r.max() < 1
    assert not (punctured.s_mask & punctured.region).any()
    assert (punctured.interior <= punctured.region).all()


def test_balls_helpers():
    balls = as_balls([(0, 0.5), {"center": [1, 0], "radius": 0.25}])
    assert balls == ((0j, 0.5), (1 + 0j, 0.25))
    z = np.array([0.4, 0.9, 0.6j])
    assert in_balls(z, balls).tolist() == [True, True, False]


def test_neighbour_sum():
    a = np.arange(25.0).reshape(5, 5)
    n = neighbour_sum(a)
    assert n[2, 2] == pytest.approx(4 * a[2, 2])  # affine data


def test_field_arith_and_nan_outside(grid):
    u = ScalarField.from_function(grid, lambda z: z.real)
    v = ScalarField.from_function(grid, lambda z: z.imag)
    w = 2 * u + v - 1.0
    assert np.isnan(w.values[~grid.region]).all()
    assert w(0.25 + 0.5j) == pytest.approx(0.0)
    assert (u.maximum(v)).at(0.5 + 0.25j) == pytest.approx(0.5)
    assert (-u).positive_part().at(0.5) == 0.0
    with pytest.raises(TypeError):
        u * v


def test_infinite_difference_marks_plus_inf(coarse):
    L = ScalarField.from_function(coarse, lambda z: np.log(np.abs(z)))
    d = L - L
    assert d.at(0) == np.inf
    assert d.at(0.5) == 0.0


def test_interpolation_exact_for_bilinear(coarse):
    u = ScalarField.from_function(coarse, lambda z: 1 + 2 * z.real - z.imag + z.real * z.imag, exact=False)
    pts = np.array([0.1 + 0.2j, -0.33 + 0.41j, 0.0])
    assert np.allclose(u(pts), 1 + 2 * pts.real - pts.imag + pts.real * pts.imag)
    assert np.isnan(u.interpolate(5 + 5j))


def test_field_shape_checked(coarse):
    with pytest.raises(ValueError):
        ScalarField(coarse, np.zeros((3, 3)))
    bad = np.zeros(coarse.shape)
    bad[coarse.region] = np.nan
    with pytest.raises(ValueError):
        ScalarField(coarse, bad)


def test_json_round_trip(disk):
    dom = disk.grid(1 / 16, exclusion=[(0, 0.25)])
    u = ScalarField.from_function(dom, lambda z: np.log(np.abs(z - 0.5)))
    assert u.neg_inf.sum() == 1
    data = json.loads(json.dumps(u.to_json()))
    back = ScalarField.from_json(data)
    assert back.domain.shape == dom.shape
    assert (back.domain.region == dom.region).all()
    a, b = u.values, back.values
    assert np.array_equal(np.isnan(a), np.isnan(b))
    assert np.array_equal(a[~np.isnan(a)], b[~np.isnan(b)])


def test_restrict_keeps_lattice(grid, punctured):
    u = ScalarField.from_function(grid, np.abs)
    r = u.restrict(punctured)
    assert np.isnan(r.at(0.1))
    assert r.at(0.75) == pytest.approx(0.75)
