"""Analysis engines: structure, recursion, MGF estimation, decay rate and tail fit."""

from .structure import analyze_structure, check_assumptions
from .recursion import sample_daters, simulate_S
from .mgf import lambda_S_empirical, lambda_block_empirical
from .decay import legendre_cross_check, optimize_routing, solve, theta_from_lambda
from .tail import cross_validate, fit_tail
from .selftest import run_selftest

__all__ = [
    "analyze_structure",
    "check_assumptions",
    "sample_daters",
    "simulate_S",
    "lambda_S_empirical",
    "lambda_block_empirical",
    "legendre_cross_check",
    "optimize_routing",
    "solve",
    "theta_from_lambda",
    "cross_validate",
    "fit_tail",
    "run_selftest",
]
