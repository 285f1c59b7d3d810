"""Runs every bundled model through every analysis path and compares with known facts."""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from src.maxplus_tails.core.decay import eta_of, legendre_cross_check, solve
from src.maxplus_tails.core.mgf import analytic_lambda_S
from src.maxplus_tails.core.structure import analyze_structure, check_assumptions
from src.maxplus_tails.core.tail import cross_validate
from src.maxplus_tails.errors import MaxPlusTailsError
from src.maxplus_tails.models.library import ModelFacts, builtin
from src.maxplus_tails.models.network import NetworkModel
from src.maxplus_tails.models.reports import to_jsonable
from src.maxplus_tails.models.settings import EstimationSettings
from src.maxplus_tails.utils.logging import setup_logger

logger = setup_logger("maxplus-tails.selftest")

ANALYTIC_TOL = 1e-9
EMPIRICAL_REL_TOL = 0.1
EMPIRICAL_N = 8

MATRIX = (
    ("mm1", {"mu": 1.0, "lam": 0.5}),
    ("tandem_identical", {"mu": 1.0, "lam": 0.3}),
    ("tandem_identical", {"mu": 1.0, "lam": 0.7}),
    ("tandem_independent", {"mu1": 1.0, "mu2": 1.5, "lam": 0.5}),
    ("fork_join", {"mu1": 1.0, "mu2": 0.8, "mu3": 1.2, "lam": 0.5}),
    ("resequencing", {"mu2": 1.2, "mu3": 0.8, "lam": 1.0, "p": 0.7}),
)


@dataclass
class CheckResult:
    model: str
    check: str
    passed: bool
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return to_jsonable(
            {"model": self.model, "check": self.check, "passed": self.passed, "detail": self.detail}
        )


def _run(label: str, check: str, body: Callable[[], CheckResult]) -> CheckResult:
    try:
        return body()
    except MaxPlusTailsError as e:
        logger.error(f"{label}/{check} raised {type(e).__name__}: {e}")
        return CheckResult(label, check, False, {"error": f"{type(e).__name__}: {e}"})


def _structure_check(label: str, model: NetworkModel, facts: ModelFacts) -> CheckResult:
    structure = analyze_structure(model)
    verdicts = check_assumptions(model)
    passed = structure.classes == facts.expected_classes and all(
        verdict.passed for verdict in verdicts.values()
    )
    if facts.expected_eta is not None:
        passed = passed and math.isclose(eta_of(model), facts.expected_eta)
    return CheckResult(
        label,
        "structure",
        passed,
        {"classes": structure.to_dict()["classes"], "eta": eta_of(model)},
    )


def _analytic_check(label: str, model: NetworkModel, facts: ModelFacts) -> CheckResult:
    report = solve(model, "analytic_first")
    expected = facts.expected_theta_star
    passed = expected is not None and abs(report.theta_star - expected) <= ANALYTIC_TOL
    return CheckResult(
        label,
        "analytic",
        passed,
        {"theta_star": report.theta_star, "expected": expected, "binding": report.binding},
    )


def _empirical_check(
    label: str, model: NetworkModel, facts: ModelFacts, settings: EstimationSettings
) -> CheckResult:
    report = solve(model, "empirical_only", settings.with_changes(n=EMPIRICAL_N))
    expected = facts.expected_theta_star
    slack = EMPIRICAL_REL_TOL * expected
    passed = (
        report.theta_star_lower - slack <= expected <= report.theta_star_upper + slack
    )
    return CheckResult(
        label,
        "empirical",
        passed,
        {
            "theta_star": report.theta_star,
            "ci": [report.theta_star_lower, report.theta_star_upper],
            "expected": expected,
            "n": EMPIRICAL_N,
        },
    )


def _tail_check(label: str, model: NetworkModel, settings: EstimationSettings) -> CheckResult:
    verdict = cross_validate(model, settings)
    return CheckResult(label, "tail", verdict.passed, verdict.to_dict() | {"decay": None})


def _legendre_check(label: str, model: NetworkModel) -> Optional[CheckResult]:
    structure = analyze_structure(model)
    eta = eta_of(model)
    lam = analytic_lambda_S(model, structure, eta)
    if lam is None or not model.check_unit_max_degree().holds:
        return None
    theta_star = solve(model, "analytic_first", structure=structure).theta_star
    check = legendre_cross_check(lam, model.arrivals, theta_star, domain=eta)
    return CheckResult(label, "legendre", check.agrees, check.to_dict())


def run_selftest(settings: Optional[EstimationSettings] = None, quick: bool = False) -> Dict[str, Any]:
    """
    Run the full matrix of bundled models and analysis paths.

    Args:
        settings: Monte Carlo parameters for the empirical and tail paths
        quick: Use reduced replica counts and a wider tail window

    Returns:
        Dict with every check result and an overall ``passed`` flag
    """
    settings = settings or EstimationSettings()
    if quick:
        settings = settings.with_changes(
            replicas=min(settings.replicas, 20_000),
            tail_replicas=min(settings.tail_replicas, 20_000),
            quantile_window=(0.9, 0.99),
        )

    results: List[CheckResult] = []
    for name, params in MATRIX:
        model, facts = builtin(name, **params)
        label = f"{name}({', '.join(f'{k}={v:g}' for k, v in params.items())})"
        logger.info(f"Self-test: {label}")
        results.append(_run(label, "structure", lambda: _structure_check(label, model, facts)))
        results.append(_run(label, "analytic", lambda: _analytic_check(label, model, facts)))
        results.append(
            _run(label, "empirical", lambda: _empirical_check(label, model, facts, settings))
        )
        results.append(_run(label, "tail", lambda: _tail_check(label, model, settings)))
        legendre = _run(label, "legendre", lambda: _legendre_check(label, model))
        if legendre is not None:
            results.append(legendre)

    passed = all(result.passed for result in results)
    failed = [f"{r.model}/{r.check}" for r in results if not r.passed]
    if failed:
        logger.warning(f"Self-test failures: {', '.join(failed)}")
    else:
        logger.info(f"Self-test passed: {len(results)} checks")
    return {
        "passed": passed,
        "empirical_n": EMPIRICAL_N,
        "checks": [result.to_dict() for result in results],
    }
