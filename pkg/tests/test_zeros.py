import math

import numpy as np
import pytest

from frozen import FROZEN
from potlab.green import ModelDomain, disk_green
from potlab.grid import ScalarField
from potlab.zeros import (
    HoloFunction,
    ZeroDivisor,
    counting_measure,
    min_separation,
    poincare_lelong,
    poincare_lelong_residual,
    weighted_zero_sum,
    zero_set_constants,
)


@pytest.fixture(scope="module")
def g128():
    return ModelDomain.disk(0, 1).grid(1 / 128)


def test_divisor_validation_and_order():
    d = ZeroDivisor((0.1, 0.2j), (2, 1))
    assert d.degree == 3 and len(d) == 2
    assert ZeroDivisor((0.1,), (1,)) <= d
    assert not (ZeroDivisor((0.1,), (3,)) <= d)
    assert not (ZeroDivisor((0.5,), (1,)) <= d)
    s = d + ZeroDivisor((0.1, 0.3), (1, 1))
    assert dict(s.entries) == {0.1 + 0j: 3, 0.2j: 1, 0.3 + 0j: 1}
    assert dict(d.scaled(1, 2).entries) == {0.1 + 0j: 1}
    assert ZeroDivisor.from_json(d.to_json()) == d
    for bad in (((0.1,), (0,)), ((0.1, 0.1), (1, 1)), ((0.1,), ())):
        with pytest.raises(ValueError):
            ZeroDivisor(*bad)


def test_divisor_inside_model():
    D = ModelDomain.disk(0, 1)
    assert ZeroDivisor((0.5,), (1,)).inside(D)
    assert not ZeroDivisor((1.5,), (1,)).inside(D)
    assert ZeroDivisor().inside(D)


def test_holo_values():
    p = HoloFunction.polynomial([0.3, -0.4j], [1, 2], lead=2.0)
    z = np.array([0.1 + 0.1j, 0.7])
    assert np.allclose(p(z), 2 * (z - 0.3) * (z + 0.4j) ** 2)
    assert np.allclose(p.log_abs(z), np.log(np.abs(p(z))))
    assert p.log_abs(0.3) == -np.inf
    assert p.divisor.degree == 3
    B = HoloFunction.blaschke([0.5, 0.2j])
    t = np.exp(1j * np.linspace(0, 6, 7))
    assert np.allclose(np.abs(B(t)), 1.0)
    E = HoloFunction.exp_harmonic([0.2, 0.5 + 0.1j])
    assert E(0.3) == pytest.approx(np.exp(0.2 + (0.5 + 0.1j) * 0.3))
    for f in (p, B, E):
        assert HoloFunction.from_json(f.to_json()) == f


def test_holo_validation():
    with pytest.raises(ValueError):
        HoloFunction("rational")
    with pytest.raises(ValueError):
        HoloFunction.polynomial([0.1], lead=0)
    with pytest.raises(ValueError):
        HoloFunction.blaschke([1.2])
    with pytest.raises(ValueError):
        HoloFunction.blaschke([0.2], lead=2.0)


def test_blaschke_log_abs_at_zero_closed_form():
    roots = [0.6, 0.7, 0.8, 0.55 + 0.3j, -0.75]
    B = HoloFunction.blaschke(roots)
    assert B.log_abs(0) == pytest.approx(sum(math.log(abs(a)) for a in roots), rel=1e-14)


def test_counting_measure(g128):
    d = ZeroDivisor((0.1, 0.2j), (2, 1))
    c = counting_measure(d, g128)
    assert c.total() == 3.0
    assert c.atom_at(0.1) == 2.0


def test_min_separation():
    assert min_separation([0.0]) == math.inf
    assert min_separation([0, 0.3, 0.1j]) == pytest.approx(0.1)


def test_poincare_lelong_recovers_multiplicities(g128):
    r = poincare_lelong(HoloFunction.polynomial([0.3, -0.4j], [1, 2]), g128)
    assert r.expected == [1.0, 2.0]
    assert np.allclose(r.recovered, [1.0, 2.0], atol=2e-3)
    assert r.residual < 2e-3


def test_poincare_lelong_nonvanishing(g128):
    r = poincare_lelong(HoloFunction.exp_harmonic([0.2, 0.5 + 0.1j, 0.3j]), g128)
    assert r.residual < 1e-8 and r.recovered == []


def test_poincare_lelong_converges():
    f = HoloFunction.polynomial([0.3 + 0.17j])
    D = ModelDomain.disk(0, 1)
    res = [poincare_lelong_residual(f, D.grid(h)) for h in (1 / 32, 1 / 64, 1 / 128)]
    assert max(res) < 1e-2


def test_poincare_lelong_rejects_close_roots(g128):
    with pytest.raises(ValueError):
        poincare_lelong(HoloFunction.polynomial([0.1, 0.1 + 0.02]), g128)


def test_weighted_zero_sum(g128):
    D = ModelDomain.disk(0, 1)
    S = [(0, 0.5)]
    v = ScalarField.from_function(D.grid(1 / 128, exclusion=S), disk_green(0, 1, 0))
    d = ZeroDivisor((0.6, 0.7j, 0.1), (1, 2, 1))
    expect = math.log(1 / 0.6) + 2 * math.log(1 / 0.7)
    assert weighted_zero_sum(d, v, S, method="exact") == pytest.approx(expect, rel=1e-14)
    assert weighted_zero_sum(d, v, S) == pytest.approx(expect, abs=1e-3)
    assert weighted_zero_sum(ZeroDivisor(), v, S) == 0.0
    with pytest.raises(ValueError):
        weighted_zero_sum(d, v, ())
    with pytest.raises(ValueError):
        weighted_zero_sum(d, v, S, method="spline")


def test_zero_set_constants():
    c1 = zero_set_constants(1)
    assert c1["b"] == 1.0 and c1["ratio"] == pytest.approx(2 * math.pi)
    c3 = zero_set_constants(3)
    assert c3["b"] == pytest.approx(FROZEN["ball_4"])
    assert c3["s"] == pytest.approx(2 * math.pi**3 / math.gamma(3) * 4)
    assert c3["ratio"] == pytest.approx(2 * math.pi * 4)
    with pytest.raises(ValueError):
        zero_set_constants(0)
