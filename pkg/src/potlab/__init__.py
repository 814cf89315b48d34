"""Grid-based potential theory: Riesz charges, Green functions, Jensen
measures and potentials, and checks of inequalities for zero sets of
holomorphic functions."""

__version__ = "0.1.0"

from .kernels import INFINITY, ball_volume_constant, inversion, kelvin_transform, kernel_h, sphere_constant
from .grid import GridDomain, ScalarField
from .fields import MajorantSpec, RieszCharge, check_subharmonic, hahn_jordan, make_delta_sbh, riesz_measure
from .green import ModelDomain, extend_green, green_function, harmonic_measure, solve_dirichlet
from .jensen import JensenMeasure, duality_inverse, is_jensen, log_potential, poisson_jensen_residual
from .testfn import (
    TestFunction,
    classify_test,
    extend_test,
    glue,
    greatest_minorant,
    is_jensen_potential,
    truncate_sequence,
)
from .zeros import HoloFunction, ZeroDivisor, counting_measure, poincare_lelong_residual, weighted_zero_sum
from .checker import (
    InequalityReport,
    cbar_constant,
    main_constant,
    proof_chain_check,
    verify_individual_1,
    verify_individual_2,
    verify_main,
    verify_uniform,
)

__all__ = [
    "INFINITY",
    "ball_volume_constant",
    "inversion",
    "kelvin_transform",
    "kernel_h",
    "sphere_constant",
    "GridDomain",
    "ScalarField",
    "MajorantSpec",
    "RieszCharge",
    "check_subharmonic",
    "hahn_jordan",
    "make_delta_sbh",
    "riesz_measure",
    "ModelDomain",
    "extend_green",
    "green_function",
    "harmonic_measure",
    "solve_dirichlet",
    "JensenMeasure",
    "duality_inverse",
    "is_jensen",
    "log_potential",
    "poisson_jensen_residual",
    "TestFunction",
    "classify_test",
    "extend_test",
    "glue",
    "greatest_minorant",
    "is_jensen_potential",
    "truncate_sequence",
    "HoloFunction",
    "ZeroDivisor",
    "counting_measure",
    "poincare_lelong_residual",
    "weighted_zero_sum",
    "InequalityReport",
    "cbar_constant",
    "main_constant",
    "proof_chain_check",
    "verify_individual_1",
    "verify_individual_2",
    "verify_main",
    "verify_uniform",
]
