import math

import numpy as np
import pytest

from potlab.checker import (
    InequalityReport,
    MajorantViolation,
    cbar_components,
    cbar_constant,
    check_below,
    main_constant,
    proof_chain_check,
    verify_individual_1,
    verify_individual_2,
    verify_main,
    verify_uniform,
)
from potlab.fields import make_delta_sbh
from potlab.green import ModelDomain, disk_green
from potlab.grid import ScalarField
from potlab.testfn import extend_test
from potlab.zeros import HoloFunction, ZeroDivisor

H = 1 / 128
S = [(0j, 0.5)]
LOG2 = math.log(2)
ROOTS = [0.6, 0.7, 0.8, 0.55 + 0.3j, -0.75]


@pytest.fixture(scope="module")
def D():
    return ModelDomain.disk(0, 1)


@pytest.fixture(scope="module")
def grid(D):
    return D.grid(H)


@pytest.fixture(scope="module")
def v(D):
    return ScalarField.from_function(D.grid(H, exclusion=S), disk_green(0, 1, 0))


@pytest.fixture(scope="module")
def M0(grid):
    z = ScalarField.constant(grid, 0.0)
    return make_delta_sbh(z, z)


def test_report_build():
    r = InequalityReport.build("x", 1.0, 1.0005, {}, {}, 1e-3)
    assert r.verdict and r.margin == pytest.approx(5e-4)
    r = InequalityReport.build("x", 10.0, 9.995, {}, {}, 1e-3)
    assert r.verdict and r.diagnostics["scale"] == 10.0
    r = InequalityReport.build("x", 10.0, 9.9, {}, {}, 1e-3)
    assert not r.verdict
    r = InequalityReport.build("x", -math.inf, 0.0, {"C": math.inf}, {}, 1e-3)
    assert r.verdict
    js = r.to_json()
    assert js["lhs"] == "-inf" and js["constants"]["C"] == "inf"


def test_main_constant(D):
    assert main_constant(S, 0, D, 1.0, h=H) == pytest.approx(1 / LOG2, rel=1e-12)
    assert main_constant(S, 0, D, LOG2, h=H) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        main_constant(S, 0, D, 0.0)
    with pytest.raises(ValueError):
        main_constant(S, 0.7, D, 1.0)
    with pytest.raises(ValueError):
        main_constant([(0, 0.5)], 0, ModelDomain.disk(0, 0.5), 1.0)


def test_cbar_closed_form(D, grid, M0):
    assert cbar_constant(0, S, D, M0) == 0.0
    # M = 0.1 |z|^2: density 0.4/(2 pi), and the integral of g_D(., 0) over D is pi/2
    q = ScalarField.from_function(grid, lambda z: 0.1 * np.abs(z) ** 2)
    Mq = make_delta_sbh(q, ScalarField.constant(grid, 0.0))
    c = cbar_components(0, S, D, Mq)
    assert c["m_plus"] == 0.0 and c["green_minus"] == 0.0
    assert c["green_nu"] == pytest.approx(0.1, abs=2e-3)


def test_cbar_infinite_and_outside_dom(grid):
    zero = ScalarField.constant(grid, 0.0)
    pole = ScalarField.from_function(grid, lambda z: np.log(np.abs(z)))
    M = make_delta_sbh(zero, pole)
    assert cbar_constant(0, S, ModelDomain.disk(0, 1), M) == math.inf
    M2 = make_delta_sbh(pole, zero)
    with pytest.raises(ValueError):
        cbar_components(0, S, ModelDomain.disk(0, 1), M2)


def test_check_below(grid):
    a = ScalarField.from_function(grid, lambda z: z.real)
    check_below(a, a + 0.0)
    with pytest.raises(MajorantViolation) as e:
        check_below(a + 0.1, a)
    assert len(e.value.witnesses) == grid.region.sum()


def test_main_equality_case(D, grid, v, M0):
    # u = log|B| <= 0 with all zeros outside S; Jensen's formula makes both sides 0
    B = HoloFunction.blaschke(ROOTS)
    u = B.field(grid)
    rep = verify_main(u, M0, v, S, 0, Dtilde=D, b=LOG2)
    assert rep.constants["C"] == pytest.approx(1.0)
    assert rep.rhs == pytest.approx(0.0, abs=1e-12)
    assert rep.lhs == pytest.approx(0.0, abs=2e-3)
    assert rep.verdict


def test_main_strict_case(D, grid, v):
    u = ScalarField.from_function(grid, lambda z: np.log(np.abs(z - 0.5)))
    u1 = ScalarField.from_function(grid, lambda z: np.log(np.abs(z - 0.5)) + 0.1 * np.abs(z) ** 2)
    M = make_delta_sbh(u1, ScalarField.constant(grid, 0.0))
    rep = verify_main(u, M, v, S, 0, Dtilde=D, b=1.0)
    # closed forms: C = 1/log 2, u(0) = -log 2, the atom at 1/2 sits on the boundary of S
    assert rep.constants["C"] == pytest.approx(1 / LOG2)
    assert rep.components["u_x0"] == pytest.approx(-LOG2)
    assert rep.verdict and rep.margin > 0


def test_main_preconditions(D, grid, v, M0):
    u = ScalarField.from_function(grid, lambda z: np.log(np.abs(z - 0.6)) + 1.0)
    with pytest.raises(MajorantViolation):
        verify_main(u, M0, v, S, 0, Dtilde=D)
    sup = ScalarField.from_function(grid, lambda z: -1 - np.abs(z) ** 2)
    with pytest.raises(ValueError, match="not subharmonic"):
        verify_main(sup, M0, v, S, 0, Dtilde=D)
    with pytest.raises(ValueError, match="not a test function"):
        verify_main(HoloFunction.blaschke([0.6]).field(grid), M0, v, S, 0, Dtilde=D, b=0.5)


def test_uniform_blaschke_budget(D, v, M0):
    B = HoloFunction.blaschke(ROOTS)
    rep = verify_uniform(B, M0, v, S, 0, b=1.0, Dtilde=D)
    closed = sum(math.log(1 / abs(a)) for a in ROOTS)
    assert rep.lhs == pytest.approx(closed, rel=1e-12)
    assert rep.rhs == pytest.approx(-math.log(abs(B(0))) / LOG2, rel=1e-12)
    assert rep.verdict


def test_uniform_subdivisor_and_sweep(D, v, M0):
    B = HoloFunction.blaschke(ROOTS)
    sub = ZeroDivisor((0.6, 0.8), (1, 1))
    rep = verify_uniform(B, M0, v, S, 0, b=1.0, Dtilde=D, divisor=sub, sweep=[v * 0.5])
    assert rep.lhs == pytest.approx(math.log(1 / 0.6) + math.log(1 / 0.8))
    assert rep.verdict and rep.diagnostics["sweep"][0]["ok"]
    with pytest.raises(ValueError, match="subdivisor"):
        verify_uniform(B, M0, v, S, 0, b=1.0, Dtilde=D, divisor=ZeroDivisor((0.3,), (1,)))
    with pytest.raises(ValueError, match="exceeds"):
        verify_uniform(B, M0, v, S, 0, b=0.5, Dtilde=D, sweep=[v])
    with pytest.raises(ValueError):
        verify_uniform(HoloFunction.blaschke([0.0]), M0, v, S, 0, b=1.0, Dtilde=D)
    with pytest.raises(MajorantViolation):
        verify_uniform(HoloFunction.polynomial([0.6], lead=3.0), M0, v, S, 0, b=1.0, Dtilde=D)


def test_individual_1_ladder(D, v, M0):
    B = HoloFunction.blaschke(ROOTS)
    ladder = [[(0, 0.78)], [(0, 0.65)], [(0, 0.5)]]
    rep = verify_individual_1(B, M0, None, v, ladder, 0, b=1.0, Dtilde=D)
    assert rep.verdict and rep.nondecreasing and rep.bounded
    assert rep.partial_sums[0] < rep.partial_sums[-1]
    assert rep.partial_sums[-1] <= rep.budget
    with pytest.raises(ValueError):
        verify_individual_1(B, M0, None, v, [], 0)


def test_individual_2_constant_obstacle(D, grid, M0):
    dom = D.grid(H, exclusion=S)
    w = ScalarField.constant(dom, 1.0)
    B = HoloFunction.blaschke(ROOTS)
    rep = verify_individual_2(B, M0, w, S, 0, Dtilde=D)
    assert rep.check == "individual2"
    assert rep.verdict
    assert rep.diagnostics["relaxation"]["last_step"] < 1e-8


def test_proof_chain_small(D, grid, v):
    u = ScalarField.from_function(grid, lambda z: np.log(np.abs(z - 0.5)))
    u1 = ScalarField.from_function(grid, lambda z: np.log(np.abs(z - 0.5)) + 0.1 * np.abs(z) ** 2)
    M = make_delta_sbh(u1, ScalarField.constant(grid, 0.0))
    Vt, _ = extend_test(v, S, 0, ModelDomain.disk(0, 0.5 + 4 * H), 1.0, D=D)
    rep = proof_chain_check(u, M, Vt, 0, n_list=(4, 16))
    assert rep.monotone
    assert max(max(r) for r in rep.residuals) < 1e-2
    assert min(rep.margins) > 0
    with pytest.raises(ValueError):
        proof_chain_check(u, M, Vt, 0.5)
