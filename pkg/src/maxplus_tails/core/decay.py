"""
Decay-rate solver.

Computes eta, the per-class rates theta^l and theta* = min(eta, theta^l),
analytically where closed forms exist and from Monte Carlo curves otherwise.
"""

import math
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from src.maxplus_tails.core.mgf import (
    block_is_analytic,
    block_theta_limit,
    default_theta_grid,
    entry_threshold,
    lambda_block_analytic,
    lambda_block_empirical,
    lambda_T,
)
from src.maxplus_tails.core.recursion import estimate_gamma
from src.maxplus_tails.core.structure import analyze_structure, check_assumptions
from src.maxplus_tails.errors import (
    AssumptionError,
    InfeasibleRoutingError,
    InstabilityError,
    ModelConfigError,
    NoDecayRegionError,
)
from src.maxplus_tails.models.library import fork_join_skeleton, routing_optimum
from src.maxplus_tails.models.network import (
    ArrivalSpec,
    Deterministic,
    EntryKind,
    Exponential,
    NetworkModel,
    check_unit_max_degree,
)
from src.maxplus_tails.models.reports import (
    ClassRate,
    DecayReport,
    LegendreCheck,
    MGFCurve,
    RoutingOptimum,
    StructureReport,
    ThetaEstimate,
)
from src.maxplus_tails.models.settings import EstimationSettings
from src.maxplus_tails.utils.logging import setup_logger
from src.maxplus_tails.utils.streams import PURPOSE_CHECKS

logger = setup_logger("maxplus-tails.decay")

ANALYTIC_XTOL = 1e-12
BINDING_TOL = 1e-9
G_CLAMP = 1e6
MAX_BRACKET = 1e8
GRID_REACH = 0.95
DEFAULT_THETA_MAX = 4.0

LambdaFn = Callable[[float], float]


def eta_of(model: NetworkModel) -> float:
    """
    sup{theta : max_i E[exp(theta B_i)] < inf}, computed entry by entry.

    Exponential(mu) contributes mu; a component appearing m times in one term
    contributes mu / m; bounded laws and constant entries contribute +inf.
    """
    return min((entry_threshold(model, entry) for entry in model.b), default=math.inf)


def _g(lam: LambdaFn, arrivals: ArrivalSpec) -> LambdaFn:
    def g(theta: float) -> float:
        value = lam(theta) + lambda_T(arrivals, -theta)
        return min(value, G_CLAMP) if not math.isnan(value) else G_CLAMP

    return g


def _negative_point(g: LambdaFn, hi: float) -> Optional[float]:
    theta = hi
    for _ in range(80):
        theta /= 2.0
        if g(theta) < 0:
            return theta
    return None


def _root(lam: LambdaFn, arrivals: ArrivalSpec, cap: float) -> Tuple[float, bool]:
    """
    Root of g = lam + Lambda_T(-.) on (0, cap).

    Returns (cap, False) when g < 0 all the way to the cap. With an infinite cap
    the bracket doubles until g turns non-negative; (inf, False) if it never does.

    Raises:
        NoDecayRegionError: If g >= 0 at every tested theta > 0
    """
    g = _g(lam, arrivals)
    if math.isinf(cap):
        hi = 1.0
        while g(hi) < 0:
            hi *= 2.0
            if hi > MAX_BRACKET:
                return math.inf, False
    else:
        hi = cap
        if g(hi) < 0:
            return cap, False
    lo = _negative_point(g, hi)
    if lo is None:
        raise NoDecayRegionError(
            "Lambda(theta) + Lambda_T(-theta) >= 0 for every tested theta > 0: "
            "the network is unstable or the estimate failed"
        )
    return float(bisect(g, lo, hi, xtol=ANALYTIC_XTOL, maxiter=500)), True


def _curve_root(
    curve: MGFCurve, arrivals: ArrivalSpec, cap: float, band: int
) -> Tuple[float, bool, bool]:
    """(theta, root_found, reached_cap) for one band of an empirical curve."""
    end = curve.finite_end
    search_cap = min(cap, end)
    value, found = _root(lambda t: curve.evaluate(t, band), arrivals, search_cap)
    if found:
        return value, True, False
    reached = math.isfinite(cap) and end >= GRID_REACH * cap * (1.0 - 1e-12)
    return (cap if reached else end), False, reached


def theta_from_lambda(
    lam: Union[LambdaFn, MGFCurve],
    arrivals: ArrivalSpec,
    theta_cap: float = math.inf,
) -> ThetaEstimate:
    """
    sup{theta > 0 : lam(theta) + Lambda_T(-theta) < 0}, capped at ``theta_cap``.

    Args:
        lam: Analytic Lambda or an estimated MGFCurve
        arrivals: Interarrival law
        theta_cap: Upper end of the search (eta, or inf)

    Returns:
        ThetaEstimate. For curves the point is the root of the central curve and
        the interval comes from the confidence band.

    Raises:
        NoDecayRegionError: If no positive theta makes g negative
    """
    if not isinstance(lam, MGFCurve):
        value, found = _root(lam, arrivals, theta_cap)
        note = "" if found else "g < 0 up to the cap: no root"
        return ThetaEstimate(
            value=value,
            lower=value,
            upper=value,
            method="analytic",
            root_found=found,
            capped=not found and math.isfinite(value),
            cap=theta_cap,
            note=note,
        )

    value, found, reached = _curve_root(lam, arrivals, theta_cap, band=0)
    try:
        lower, _, _ = _curve_root(lam, arrivals, theta_cap, band=+1)
    except NoDecayRegionError:
        lower = 0.0
    upper, upper_found, upper_reached = _curve_root(lam, arrivals, theta_cap, band=-1)
    if not upper_found and not upper_reached:
        upper = theta_cap

    note = ""
    if not found and reached:
        note = "g < 0 on the whole grid up to the cap: no root"
    elif not found and math.isinf(theta_cap):
        note = f"g < 0 on the whole grid (theta <= {value:.6g}): no root"
        lower, value, upper = value, math.inf, math.inf
    elif not found:
        note = f"search capped at the last finite grid point theta={value:.6g}"
        logger.warning(f"Curve {lam.label}: {note}")
    return ThetaEstimate(
        value=value,
        lower=min(lower, value),
        upper=max(upper, value),
        method="empirical",
        root_found=found,
        capped=not found and math.isfinite(value),
        cap=theta_cap,
        note=note,
    )


def analytic_stability(model: NetworkModel, structure: StructureReport) -> Optional[float]:
    """
    gamma = max over classes of the mean diagonal entry, or None.

    Only available when every class is a singleton whose diagonal entry is
    constant or a single sum of components.
    """
    means = []
    for coords in structure.classes:
        if len(coords) != 1:
            return None
        entry = model.a[coords[0]][coords[0]]
        if entry.kind is EntryKind.CONST_ZERO:
            means.append(0.0)
        elif len(entry.terms) == 1:
            means.append(sum(model.components[k - 1].distribution.mean for k in entry.terms[0]))
        else:
            return None
    return max(means)


def stability_verdict(
    model: NetworkModel, structure: StructureReport, settings: EstimationSettings
) -> Dict[str, object]:
    """
    Stability of the network: gamma against the mean interarrival time.

    Raises:
        InstabilityError: If gamma >= a
    """
    a = model.arrivals.mean
    gamma = analytic_stability(model, structure)
    if gamma is not None:
        verdict = {"method": "analytic", "gamma": gamma, "mean_interarrival": a, "stable": gamma < a}
    else:
        estimate = estimate_gamma(
            model,
            settings.gamma_horizon,
            settings.gamma_replicas,
            settings.streams,
            settings.threads,
            block_size=settings.block_size,
        )
        verdict = {"method": "estimated", **estimate.to_dict()}
        verdict["gamma"] = estimate.gamma
    if not verdict["stable"]:
        raise InstabilityError(
            f"{model.name} is unstable: gamma={verdict['gamma']:.6g} >= a={a:.6g}"
        )
    return verdict


def require_assumptions(model: NetworkModel, settings: EstimationSettings) -> None:
    """Raise AssumptionError unless (ST), (SP) and (LT) hold."""
    rng = settings.streams.child(PURPOSE_CHECKS).stream(0)
    verdicts = check_assumptions(model, rng=rng)
    failed = [name for name, verdict in verdicts.items() if not verdict.passed]
    if failed:
        details = "; ".join(f"({name}) {verdicts[name].detail}" for name in failed)
        raise AssumptionError(f"{model.name} violates {', '.join(failed)}: {details}")


def _class_grid(
    model: NetworkModel, coords, cap: float, settings: EstimationSettings
) -> np.ndarray:
    limit = min(block_theta_limit(model, coords), cap)
    theta_max = settings.theta_max
    if theta_max is None and math.isinf(limit):
        theta_max = DEFAULT_THETA_MAX
    return default_theta_grid(limit, theta_max, settings.grid_points)


def solve(
    model: NetworkModel,
    method: str = "analytic_first",
    settings: Optional[EstimationSettings] = None,
    structure: Optional[StructureReport] = None,
    eta_override: Optional[float] = None,
) -> DecayReport:
    """
    theta* for a network model.

    Args:
        model: Network model satisfying (ST), (SP) and (LT)
        method: ``analytic_first`` uses closed forms where available,
            ``empirical_only`` estimates every class
        settings: Monte Carlo parameters for the empirical path
        structure: Precomputed structure report
        eta_override: Replace the computed eta

    Returns:
        DecayReport with eta, per-class rates, theta* and its binding cause

    Raises:
        AssumptionError: If an assumption fails
        InstabilityError: If gamma >= mean interarrival
        NoDecayRegionError: If a class has no negative region of g
    """
    if method not in ("analytic_first", "empirical_only"):
        raise ValueError(f"Unknown method {method!r}")
    settings = settings or EstimationSettings()
    structure = structure or analyze_structure(model)
    require_assumptions(model, settings)

    eta = eta_of(model) if eta_override is None else float(eta_override)
    if eta <= 0:
        raise AssumptionError(f"eta must be positive, got {eta}")
    stability = stability_verdict(model, structure, settings)

    unit_degree = check_unit_max_degree(model)
    uncapped = unit_degree.holds
    cap = math.inf if uncapped else eta
    diagnostics: List[str] = [f"unit max degree: {v}" for v in unit_degree.violations]
    logger.info(
        f"Solving theta* for {model.name}: d={structure.d}, eta={eta:.6g}, "
        f"eta cap {'lifted' if uncapped else 'applies'}, method={method}"
    )

    rates: List[ClassRate] = []
    for ell, coords in enumerate(structure.classes):
        if method == "analytic_first" and block_is_analytic(model, structure, ell):
            estimate = theta_from_lambda(
                lambda t, ell=ell: lambda_block_analytic(model, structure, ell, t),
                model.arrivals,
                cap,
            )
        else:
            curve = lambda_block_empirical(
                model,
                structure,
                ell,
                _class_grid(model, coords, cap, settings),
                settings.n,
                settings.replicas,
                settings.streams,
                settings.threads,
                block_size=settings.block_size,
            )
            estimate = theta_from_lambda(curve, model.arrivals, cap)
        if estimate.note:
            diagnostics.append(f"class {ell + 1}: {estimate.note}")
        rates.append(ClassRate(ell, coords, estimate))

    contributing = [rate for rate in rates if math.isfinite(rate.theta)]
    theta_min = min((rate.theta for rate in contributing), default=math.inf)
    lower_min = min((rate.estimate.lower for rate in contributing), default=math.inf)
    upper_min = min((rate.estimate.upper for rate in contributing), default=math.inf)

    if not uncapped and theta_min >= eta - BINDING_TOL:
        binding = "eta"
    elif contributing:
        binding = f"theta^{min(contributing, key=lambda r: r.theta).class_index + 1}"
    else:
        binding = "none"
        diagnostics.append("every class is root-free and eta is infinite: bounded daters")

    report = DecayReport(
        eta=eta,
        theta_by_class=rates,
        theta_star=min(cap, theta_min),
        theta_star_lower=min(cap, lower_min),
        theta_star_upper=min(cap, upper_min),
        binding=binding,
        eta_cap_lifted=uncapped,
        diagnostics=diagnostics,
        stability=stability,
    )
    logger.info(f"theta*={report.theta_star:.9g} for {model.name} (binding {binding})")
    return report


def _routing_rates(model: NetworkModel) -> Optional[Tuple[float, float, float, int]]:
    """(mu2, mu3, lambda, coin id) when ``model`` is the exponential two-path clone family."""
    skeleton_a, skeleton_b = fork_join_skeleton()
    if model.s != 4 or model.K != 3 or model.a != skeleton_a or model.b != skeleton_b:
        return None
    if not isinstance(model.arrivals.dist, Exponential):
        return None
    first, up, down = model.components
    if first.coin is not None or first.dist != Deterministic(0.0):
        return None
    if up.coin is None or down.coin is None or up.coin.id != down.coin.id:
        return None
    if (up.coin.branch, down.coin.branch) != (2, 3):
        return None
    if not isinstance(up.dist, Exponential) or not isinstance(down.dist, Exponential):
        return None
    return up.dist.rate, down.dist.rate, model.arrivals.dist.rate, up.coin.id


def _single_coin(model: NetworkModel) -> int:
    coins = model.coins
    if len(coins) != 1:
        raise ModelConfigError(
            f"Routing optimization needs exactly one routing coin, found {len(coins)}",
            "components",
        )
    return next(iter(coins))


def optimize_routing(
    model: NetworkModel,
    arrivals: Optional[ArrivalSpec] = None,
    settings: Optional[EstimationSettings] = None,
) -> RoutingOptimum:
    """
    Routing probability p maximizing theta*(p) = min(theta_2(p), theta_3(p)).

    The exponential clone family with Poisson arrivals has the closed form
    p* = ((mu2 - mu3) / lambda + 1) / 2, clamped to the stable interval and kept
    strictly inside (0, 1); ``attained`` is False when the supremum lies at an
    endpoint. Any other single-coin model is searched numerically with a solve
    per p.

    Raises:
        InfeasibleRoutingError: If no p stabilizes both paths
    """
    if arrivals is not None:
        model = model.with_arrivals(arrivals)
    coin_id = _single_coin(model)
    rates = _routing_rates(model)

    if rates is not None:
        mu2, mu3, lam, _ = rates
        if lam >= mu2 + mu3:
            raise InfeasibleRoutingError(
                f"lambda={lam:.6g} >= mu2 + mu3 = {mu2 + mu3:.6g}: no routing stabilizes both paths"
            )
        low = max(0.0, 1.0 - mu3 / lam)
        high = min(1.0, mu2 / lam)
        p, theta, attained = routing_optimum(mu2, mu3, lam)
        clamped = not low < p < high or not attained
        if not attained:
            logger.warning(
                f"theta*(p) peaks at the edge of (0, 1); reporting p*={p:.9g} just inside it"
            )
        logger.info(f"Closed-form routing optimum p*={p:.9g}, theta*={theta:.9g}")
        return RoutingOptimum(p, theta, (low, high), clamped, "closed_form", attained)

    settings = settings or EstimationSettings()
    eps = 1e-6

    def negative_theta(p: float) -> float:
        try:
            return -solve(model.with_coin_probability(coin_id, p), settings=settings).theta_star
        except (InstabilityError, NoDecayRegionError):
            return 0.0

    result = minimize_scalar(
        negative_theta, bounds=(eps, 1.0 - eps), method="bounded", options={"xatol": 1e-6}
    )
    theta = -float(result.fun)
    if theta <= 0:
        raise InfeasibleRoutingError(f"No routing probability stabilizes {model.name}")
    logger.info(f"Numeric routing optimum p*={result.x:.6g}, theta*={theta:.6g}")
    return RoutingOptimum(float(result.x), theta, (eps, 1.0 - eps), False, "bounded_search")


def legendre_cross_check(
    lam: Union[LambdaFn, MGFCurve],
    arrivals: ArrivalSpec,
    theta_star: float,
    domain: Optional[float] = None,
    points: int = 1000,
    tolerance: float = 1e-3,
) -> LegendreCheck:
    """
    inf over alpha > 0 of I(alpha) / alpha from a numerical Legendre transform.

    I(x) = sup_theta (theta x - Lambda(theta) - Lambda_T(-theta)) is evaluated on
    a theta grid over [0, 0.999 * domain). Advisory only.

    Args:
        lam: Analytic Lambda_S or an estimated curve
        arrivals: Interarrival law
        theta_star: Value to compare against
        domain: Divergence point of an analytic Lambda_S (eta); curves use their finite end
        points: Theta grid size
        tolerance: Agreement tolerance

    Returns:
        LegendreCheck
    """
    notes: List[str] = []
    if isinstance(lam, MGFCurve):
        top = lam.finite_end
        fn = lambda t: lam.evaluate(t)  # noqa: E731
    else:
        fn = lam
        if domain is None or math.isinf(domain):
            top = max(4.0 * theta_star, 1.0) if math.isfinite(theta_star) else 4.0
        else:
            top = 0.999 * domain
    if domain is not None and math.isfinite(domain) and domain <= theta_star * (1.0 + 1e-6):
        notes.append("Lambda_S is infinite just above theta*: the rate-function identity does not apply")

    thetas = np.linspace(0.0, top, points)
    h = np.array([fn(t) + lambda_T(arrivals, -t) for t in thetas])
    finite = np.isfinite(h)
    thetas, h = thetas[finite], h[finite]
    slope_top = (h[-1] - h[-2]) / (thetas[-1] - thetas[-2]) if h.size > 1 else 0.0

    if slope_top <= 0:
        notes.append("Lambda_S + Lambda_T(-.) is non-increasing: degenerate transform")
        return LegendreCheck(math.nan, theta_star, False, tolerance, False, tuple(notes))

    alphas = np.geomspace(slope_top * 1e-6, slope_top, 2 * points)
    objective = alphas[:, None] * thetas[None, :] - h[None, :]
    best = objective.argmax(axis=1)
    ratios = objective[np.arange(alphas.size), best] / alphas
    index = int(ratios.argmin())
    rate = float(ratios[index])

    applicable = not notes
    if best[index] == thetas.size - 1:
        applicable = False
        notes.append("supremum sits at the grid edge")
    agrees = math.isfinite(theta_star) and abs(rate - theta_star) <= tolerance
    logger.info(f"Legendre check: inf I(a)/a={rate:.6g} vs theta*={theta_star:.6g}")
    return LegendreCheck(rate, theta_star, agrees, tolerance, applicable, tuple(notes))
