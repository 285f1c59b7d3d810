"""Direct Monte Carlo estimate of the decay rate from samples of Z."""

import math
from typing import List, Optional, Tuple

import numpy as np

from src.maxplus_tails.core.decay import solve, stability_verdict
from src.maxplus_tails.core.recursion import default_margin, sample_daters
from src.maxplus_tails.core.structure import analyze_structure
from src.maxplus_tails.errors import DegenerateSampleError, TailWindowError
from src.maxplus_tails.models.network import NetworkModel
from src.maxplus_tails.models.reports import CrossCheckVerdict, TailFit
from src.maxplus_tails.models.settings import EstimationSettings
from src.maxplus_tails.utils.logging import setup_logger
from src.maxplus_tails.utils.streams import PURPOSE_BOOTSTRAP

logger = setup_logger("maxplus-tails.tail")

MIN_EXCEEDANCES = 50
LEVELS = 16
CENSORED_SHARE = 0.01


def _check_window(window: Tuple[float, float], samples: int) -> None:
    q_lo, q_hi = window
    if not 0 < q_lo < q_hi < 1:
        raise TailWindowError(f"Quantile window must satisfy 0 < lo < hi < 1, got {window}")
    if samples * (1.0 - q_hi) < MIN_EXCEEDANCES:
        raise TailWindowError(
            f"{samples} samples leave fewer than {MIN_EXCEEDANCES} exceedances above "
            f"the {q_hi} quantile"
        )


def _ccdf_levels(sorted_z: np.ndarray, probabilities: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(x, log P(Z > x)) at the given quantile levels, ties and empty tails dropped."""
    x = np.unique(np.quantile(sorted_z, probabilities))
    above = sorted_z.size - np.searchsorted(sorted_z, x, side="right")
    keep = above > 0
    return x[keep], np.log(above[keep] / sorted_z.size)


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def fit_tail_samples(
    z: np.ndarray,
    quantile_window: Tuple[float, float],
    rng: np.random.Generator,
    bootstrap: int = 200,
    censored: int = 0,
) -> TailFit:
    """
    Least-squares slope of log P(Z > x) on quantile levels, with bootstrap s.e.

    Raises:
        TailWindowError: If the window leaves too few exceedances
        DegenerateSampleError: If the sample has no spread
    """
    z = np.sort(np.asarray(z, dtype=float))
    total = z.size + censored
    _check_window(quantile_window, z.size)
    probabilities = np.linspace(quantile_window[0], quantile_window[1], LEVELS)

    x, y = _ccdf_levels(z, probabilities)
    if np.ptp(z) == 0 or x.size < 2:
        raise DegenerateSampleError(
            f"All {z.size} daters sit at {z[0]:.6g}: there is no tail to fit"
        )
    slope = _slope(x, y)

    slopes: List[float] = []
    for _ in range(bootstrap):
        resample = np.sort(rng.choice(z, size=z.size, replace=True))
        bx, by = _ccdf_levels(resample, probabilities)
        if bx.size >= 2:
            slopes.append(_slope(bx, by))
    slope_se = float(np.std(slopes, ddof=1)) if len(slopes) > 1 else math.nan

    warnings: List[str] = []
    if censored > CENSORED_SHARE * total:
        warnings.append(
            f"{censored} of {total} daters did not converge: the fit underestimates the tail"
        )
        logger.warning(warnings[-1])
    return TailFit(
        samples=total,
        quantile_window=tuple(quantile_window),
        slope=slope,
        slope_se=slope_se,
        levels=list(zip(x.tolist(), y.tolist())),
        censored=censored,
        warnings=warnings,
    )


def fit_tail(
    model: NetworkModel,
    settings: Optional[EstimationSettings] = None,
    gamma: Optional[float] = None,
) -> TailFit:
    """
    Sample daters and fit the exponential tail slope.

    Args:
        model: Stable network model
        settings: Replica count, quantile window, seed and threads
        gamma: Known Lyapunov exponent; computed when omitted

    Returns:
        TailFit; ``theta_hat`` is the decay-rate estimate

    Raises:
        InstabilityError: If the network is unstable
        TailWindowError: If the window leaves too few exceedances
        DegenerateSampleError: If every dater has the same value
    """
    settings = settings or EstimationSettings()
    replicas = settings.tail_replicas
    _check_window(settings.quantile_window, replicas)
    if gamma is None:
        gamma = stability_verdict(model, analyze_structure(model), settings)["gamma"]
    margin = default_margin(gamma, model.arrivals.mean)

    batch = sample_daters(
        model,
        replicas,
        settings.streams,
        margin,
        settings.threads,
        max_horizon=settings.max_horizon,
        block_size=settings.block_size,
    )
    rng = settings.streams.child(PURPOSE_BOOTSTRAP).stream(0)
    fit = fit_tail_samples(
        batch.z[batch.converged],
        settings.quantile_window,
        rng,
        settings.bootstrap,
        censored=batch.censored,
    )
    logger.info(
        f"Tail fit for {model.name}: theta_hat={fit.theta_hat:.4g} (s.e. {fit.slope_se:.3g}) "
        f"from {replicas} daters"
    )
    return fit


def cross_validate(
    model: NetworkModel,
    settings: Optional[EstimationSettings] = None,
    method: str = "analytic_first",
    eta_override: Optional[float] = None,
) -> CrossCheckVerdict:
    """
    Compare the solver's theta* with the fitted tail slope.

    PASS iff |theta_hat - theta*| <= max(3 s.e., 0.1 theta*) and the fit is not
    voided by censoring.
    """
    settings = settings or EstimationSettings()
    report = solve(model, method, settings, eta_override=eta_override)
    fit = fit_tail(model, settings, gamma=float(report.stability["gamma"]))

    warnings = list(fit.warnings)
    theta_star = report.theta_star
    if math.isinf(theta_star):
        warnings.append("theta* is infinite: the daters are bounded")
        tolerance = math.inf
        passed = False
    else:
        tolerance = max(3.0 * fit.slope_se, 0.1 * theta_star)
        passed = abs(fit.theta_hat - theta_star) <= tolerance and not fit.void
    verdict = CrossCheckVerdict(
        passed=passed,
        theta_fit=fit.theta_hat,
        theta_fit_se=fit.slope_se,
        theta_star=theta_star,
        binding=report.binding,
        tolerance=tolerance,
        warnings=warnings,
        fit=fit,
        report=report,
    )
    log = logger.info if passed else logger.warning
    log(
        f"Cross-check {verdict.label} for {model.name}: theta_hat={fit.theta_hat:.4g}, "
        f"theta*={theta_star:.4g}, tolerance={tolerance:.3g}"
    )
    return verdict
