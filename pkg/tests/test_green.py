import math

import numpy as np
import pytest

from frozen import FROZEN
from potlab.green import (
    ModelDomain,
    boundary_of_balls,
    default_dtilde,
    dirichlet_system,
    disk_green,
    extend_green,
    green_function,
    harmonic_measure,
    solve_dirichlet,
)


def test_model_validation_and_json():
    with pytest.raises(ValueError):
        ModelDomain.disk(0, -1)
    with pytest.raises(ValueError):
        ModelDomain.annulus(0, 1, 0.5)
    with pytest.raises(ValueError):
        ModelDomain("triangle")
    for m in (ModelDomain.disk(0.1j, 2), ModelDomain.annulus(0, 0.2, 1), ModelDomain.rectangle(0, 2, -1, 1)):
        assert ModelDomain.from_json(m.to_json()) == m


def test_contains_and_distance():
    D = ModelDomain.annulus(0, 0.5, 1)
    assert D.contains(0.75) and not D.contains(0.25) and not D.contains(1.0)
    assert D.inner_distance(0.7) == pytest.approx(0.2)
    R = ModelDomain.rectangle(0, 2, 0, 1)
    assert R.inner_distance(1 + 0.3j) == pytest.approx(0.3)


def test_disk_green_closed_form_matches_oracle():
    g0 = disk_green(0, 1, 0)
    assert g0(0.5) == pytest.approx(FROZEN["green_half_0"], rel=1e-14)
    assert disk_green(0, 1, 0.1)(0.6) == pytest.approx(FROZEN["green_06_01"], rel=1e-13)
    assert disk_green(0, 1, 0.1j)(0.3 - 0.4j) == pytest.approx(FROZEN["green_a_x0"], rel=1e-13)
    # scaled and shifted disk: g_{c+RD}(c + R z, c + R w) = g_D(z, w)
    g = disk_green(1 + 1j, 2.0, 1 + 1.2j)
    assert g(1 + 1j + 2 * 0.6) == pytest.approx(disk_green(0, 1, 0.1j)(0.6), rel=1e-13)
    assert g(1 + 1j + 2.5) == 0.0
    assert g(1 + 1.2j) == np.inf


def test_disk_green_symmetry():
    z, w = 0.3 + 0.1j, -0.2 + 0.5j
    assert disk_green(0, 1, w)(z) == pytest.approx(disk_green(0, 1, z)(w), rel=1e-13)


def test_dirichlet_reproduces_harmonic_data(disk):
    dom = disk.grid(1 / 64)
    f = lambda z: (z**2).real + 0.5 * z.imag  # noqa: E731
    u = solve_dirichlet(dom, f)
    err = np.nanmax(np.abs(u.values - f(dom.nodes)))
    assert err < 2e-4


def test_dirichlet_linear_exact(disk):
    dom = disk.grid(1 / 32)
    f = lambda z: 1 + 2 * z.real - 3 * z.imag  # noqa: E731
    u = solve_dirichlet(dom, f)
    assert np.nanmax(np.abs(u.values - f(dom.nodes))) < 1e-12


def test_sor_agrees_with_direct(disk):
    dom = disk.grid(1 / 32, exclusion=[(0.1, 0.3)])
    f = lambda z: np.log(np.abs(z - 0.1))  # noqa: E731
    info = {}
    a = solve_dirichlet(dom, f)
    b = solve_dirichlet(dom, f, method="sor", tol=1e-12, info=info)
    assert info["sweeps"] > 0
    assert np.nanmax(np.abs(a.values - b.values)) < 1e-9
    with pytest.raises(ValueError):
        solve_dirichlet(dom, f, method="cg")


def test_dirichlet_system_shape(disk):
    dom = disk.grid(1 / 16)
    s = dirichlet_system(dom)
    assert s.A.shape == (dom.region.sum(),) * 2
    assert np.allclose(np.abs(s.ghost_points), 1.0, atol=1e-9)


def test_annulus_green_properties():
    A = ModelDomain.annulus(0, 0.3, 1.0)
    h = 1 / 128
    g1 = green_function(A, 0.6, h=h)
    g2 = green_function(A, -0.5j, h=h)
    # symmetry g(a, b) = g(b, a)
    assert g1(-0.5j) == pytest.approx(g2(0.6), rel=0.01)
    vals = g1.values[g1.domain.region & np.isfinite(g1.values)]
    assert vals.min() > -1e-9
    ring = g1.domain.collar(0) & g1.domain.region
    # boundary limit 0: values on the outer ring are O(distance to the boundary)
    dist = -A.sdf(g1.domain.nodes[ring])
    assert np.max(g1.values[ring] / dist) < 10


def test_rectangle_green_vs_disk_scaling():
    # log singularity normalization: g(z, p) + log|z - p| is bounded near p
    R = ModelDomain.rectangle(-1, 1, -1, 1)
    g = green_function(R, 0, h=1 / 128)
    near = [g(r) + math.log(r) for r in (1 / 32, 1 / 16)]
    assert abs(near[0] - near[1]) < 0.01


def test_green_rejects_outside_pole(disk):
    with pytest.raises(ValueError):
        green_function(disk, 1.5)
    with pytest.raises(ValueError):
        green_function(ModelDomain.interval(0, 1), 0.5)


def test_extend_green_zero_outside(disk):
    g = green_function(disk, 0.2, h=1 / 64)
    big = ModelDomain.disk(0, 1.25).grid(1 / 64)
    e = extend_green(g, disk, big)
    out = big.region & ~disk.contains(big.nodes)
    assert (e.values[out] == 0).all()
    assert e(1.1) == 0.0
    assert e(0.5) == pytest.approx(disk_green(0, 1, 0.2)(0.5))


def test_harmonic_measure_disk_matches_oracle():
    D = ModelDomain.disk(0, 1)
    for x0, key in ((0, "arc_quarter_origin"), (0.3 + 0.2j, "arc_quarter_03")):
        hm = harmonic_measure(D, x0, K=4096)
        assert hm.total() == pytest.approx(1.0, abs=1e-14)
        ang = np.angle(hm.points) % (2 * np.pi)
        arc = hm.weights[(ang > 0) & (ang < np.pi / 2)].sum() + 0.5 * hm.weights[(ang == 0) | np.isclose(ang, np.pi / 2)].sum()
        assert arc == pytest.approx(FROZEN[key], abs=1e-6)


def test_harmonic_measure_reproduces_harmonic():
    D = ModelDomain.disk(0.2, 1.5)
    hm = harmonic_measure(D, 0.5 - 0.4j)
    f = lambda z: (np.exp(z)).real  # noqa: E731
    assert hm.integrate(f) == pytest.approx(f(np.array(0.5 - 0.4j)), abs=1e-12)


def test_harmonic_measure_annulus_log():
    A = ModelDomain.annulus(0, 0.25, 1.0)
    x = 0.5
    hm = harmonic_measure(A, x, h=1 / 128)
    inner = hm.weights[np.abs(hm.points) < 0.6].sum()
    assert hm.total() == pytest.approx(1.0, abs=1e-6)
    assert inner == pytest.approx(math.log(1 / x) / math.log(4), abs=0.01)


def test_harmonic_measure_interval():
    I = ModelDomain.interval(-1, 3)
    hm = harmonic_measure(I, 0)
    assert hm.weights.tolist() == [0.75, 0.25]
    assert hm.integrate(lambda t: 2 * t.real + 1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        harmonic_measure(I, 4)


def test_default_dtilde_and_ball_boundary():
    D = default_dtilde([(0, 0.5), (0.3, 0.4)], 0, 1 / 256)
    assert D.R == pytest.approx(0.7 + 4 / 256)
    pts = boundary_of_balls([(0, 0.5), (0.5, 0.5)], K=512)
    assert np.all((np.abs(pts) >= 0.5 - 1e-9) & (np.abs(pts - 0.5) >= 0.5 - 1e-9))
    assert pts.size < 1024
