import math

import pytest

from src.maxplus_tails.core.decay import (
    eta_of,
    legendre_cross_check,
    optimize_routing,
    solve,
    theta_from_lambda,
)
from src.maxplus_tails.core.mgf import analytic_lambda_S
from src.maxplus_tails.core.structure import analyze_structure
from src.maxplus_tails.errors import (
    AssumptionError,
    InfeasibleRoutingError,
    InstabilityError,
    NoDecayRegionError,
)
from src.maxplus_tails.models.library import ROUTING_COIN, ZERO, builtin, poly, single
from src.maxplus_tails.models.library import resequencing as build_resequencing
from src.maxplus_tails.models.network import ArrivalSpec, ComponentSpec, Exponential, NetworkModel


def mm1_lambda(theta):
    return -math.log1p(-theta) if theta < 1 else math.inf


def test_theta_from_analytic_lambda():
    estimate = theta_from_lambda(mm1_lambda, ArrivalSpec.poisson(0.5))
    assert estimate.value == pytest.approx(0.5, abs=1e-9)
    assert estimate.root_found and not estimate.capped


def test_theta_is_capped_below_the_root():
    estimate = theta_from_lambda(mm1_lambda, ArrivalSpec.poisson(0.5), theta_cap=0.3)
    assert estimate.value == 0.3
    assert estimate.capped and not estimate.root_found


def test_no_decay_region_raises():
    with pytest.raises(NoDecayRegionError):
        theta_from_lambda(lambda t: 10.0 * t, ArrivalSpec.poisson(0.5))


def test_mm1_rate(mm1):
    model, _ = mm1
    report = solve(model)
    assert report.theta_star == pytest.approx(0.5, abs=1e-9)
    assert report.binding == "theta^1"
    assert report.eta_cap_lifted
    assert report.theta_star_lower == report.theta_star_upper == report.theta_star


@pytest.mark.parametrize(
    "lam, theta_star, binding",
    [(0.3, 0.5, "eta"), (0.4, 0.5, "eta"), (0.7, 0.3, "theta^1")],
)
def test_identical_tandem_phase_transition(lam, theta_star, binding):
    model, _ = builtin("tandem_identical", mu=1.0, lam=lam)
    report = solve(model)
    assert report.eta == pytest.approx(0.5)
    assert report.theta_star == pytest.approx(theta_star, abs=1e-9)
    assert report.binding == binding
    assert not report.eta_cap_lifted


def test_mm1_rate_falls_with_load():
    loads = [round(0.1 * k, 1) for k in range(1, 10)]
    rates = [solve(builtin("mm1", mu=1.0, lam=lam)[0]).theta_star for lam in loads]
    for lam, rate in zip(loads, rates):
        assert rate == pytest.approx(1.0 - lam, abs=1e-9)
    assert all(later < earlier for earlier, later in zip(rates, rates[1:]))


@pytest.mark.parametrize("offset", [-1e-6, 1e-6])
def test_identical_tandem_is_continuous_at_the_kink(offset):
    model, _ = builtin("tandem_identical", mu=1.0, lam=0.5 + offset)
    assert abs(solve(model).theta_star - 0.5) <= 2e-6


def test_independent_tandem_takes_slower_station():
    model, _ = builtin("tandem_independent", mu1=1.5, mu2=1.0, lam=0.5)
    report = solve(model)
    assert report.theta_star == pytest.approx(0.5, abs=1e-9)
    assert report.binding == "theta^2"


def test_fork_join_rate_and_root_free_join(fork_join):
    model, facts = fork_join
    report = solve(model)
    assert report.theta_star == pytest.approx(facts.expected_theta_star, abs=1e-9)
    assert report.binding == "theta^2"
    join = report.theta_by_class[3]
    assert math.isinf(join.theta)
    assert any(d.startswith("class 4") for d in report.diagnostics)


def test_resequencing_rate(resequencing):
    model, facts = resequencing
    report = solve(model)
    assert report.eta == pytest.approx(0.8)
    assert report.theta_star == pytest.approx(facts.expected_theta_star, abs=1e-9)
    assert report.binding in ("theta^2", "theta^3")
    # the release station never queues: its rate sits at the cap
    assert report.theta_by_class[0].estimate.capped


def test_eta_override_binds_when_cap_applies(tandem_identical):
    model, _ = tandem_identical
    report = solve(model, eta_override=0.2)
    assert report.theta_star == pytest.approx(0.2)
    assert report.binding == "eta"


def test_unstable_model_is_rejected():
    model, _ = builtin("mm1", mu=1.0, lam=1.5)
    with pytest.raises(InstabilityError):
        solve(model)


def test_assumption_failure_is_raised():
    model = NetworkModel(
        s=1,
        components=(ComponentSpec(1, Exponential(1.0)),),
        a=((single(1),),),
        b=(ZERO,),
        arrivals=ArrivalSpec.poisson(0.5),
    )
    with pytest.raises(AssumptionError):
        solve(model)


def test_unknown_method_is_rejected(mm1):
    with pytest.raises(ValueError):
        solve(mm1[0], method="guess")


def test_empirical_rate_for_mm1(mm1, small_settings):
    model, _ = mm1
    report = solve(model, "empirical_only", small_settings.with_changes(n=4))
    rate = report.theta_by_class[0].estimate
    assert rate.method == "empirical"
    assert report.theta_star == pytest.approx(0.5, abs=0.1)
    assert report.theta_star_lower <= report.theta_star <= report.theta_star_upper


def test_empirical_identical_tandem_reports_eta(small_settings):
    model, _ = builtin("tandem_identical", mu=1.0, lam=0.3)
    report = solve(model, "empirical_only", small_settings.with_changes(n=4))
    assert report.theta_star == pytest.approx(0.5)
    assert report.binding == "eta"


def test_closed_form_routing_optimum():
    model, facts = builtin("resequencing", mu2=1.2, mu3=0.8, lam=1.0, p=0.3)
    optimum = optimize_routing(model)
    assert optimum.method == "closed_form"
    assert optimum.p == pytest.approx(0.7)
    assert optimum.theta_star == pytest.approx(0.5)
    assert not optimum.clamped
    assert facts.expected_p_star == pytest.approx(0.7)


def test_routing_optimum_stays_inside_unit_interval():
    model, _ = builtin("resequencing", mu2=3.0, mu3=0.5, lam=1.0)
    optimum = optimize_routing(model)
    assert 0.0 < optimum.p < 1.0
    assert optimum.p == pytest.approx(1.0)
    assert optimum.theta_star == pytest.approx(0.5)
    assert optimum.clamped
    assert not optimum.attained
    assert optimum.to_dict()["attained"] is False


def test_routing_optimum_edge_is_a_usable_probability():
    model, _ = build_resequencing(
        Exponential(3.0), Exponential(0.5), 0.5, ArrivalSpec.poisson(1.0)
    )
    optimum = optimize_routing(model)
    assert 0.0 < optimum.p < 1.0
    assert not optimum.attained
    rebuilt, facts = build_resequencing(
        Exponential(3.0), Exponential(0.5), optimum.p, ArrivalSpec.poisson(1.0)
    )
    assert facts.expected_theta_star == pytest.approx(optimum.theta_star)
    assert rebuilt.coins[ROUTING_COIN] == pytest.approx(optimum.p)


def test_infeasible_routing():
    model, _ = builtin("resequencing", mu2=1.0, mu3=1.0, lam=2.5)
    with pytest.raises(InfeasibleRoutingError):
        optimize_routing(model)


def test_numeric_routing_search_beats_fixed_choices():
    model, _ = builtin("resequencing", "exponential", "deterministic", mu2=1.2, mu3=0.8, lam=1.0)
    optimum = optimize_routing(model)
    assert optimum.method == "bounded_search"
    assert 0.0 < optimum.p < 1.0
    for p in (0.5, 0.9):
        fixed = solve(model.with_coin_probability(1, p)).theta_star
        assert optimum.theta_star >= fixed - 1e-6


@pytest.mark.parametrize("fixture", ["mm1", "tandem_independent"])
def test_legendre_identity_agrees(request, fixture):
    model, facts = request.getfixturevalue(fixture)
    structure = analyze_structure(model)
    eta = eta_of(model)
    lam = analytic_lambda_S(model, structure, eta)
    check = legendre_cross_check(lam, model.arrivals, facts.expected_theta_star, domain=eta)
    assert check.applicable
    assert check.agrees
    assert check.theta_rate == pytest.approx(0.5, abs=1e-3)


def test_legendre_identity_flags_eta_binding(tandem_identical):
    model, _ = tandem_identical
    eta = eta_of(model)
    lam = analytic_lambda_S(model, analyze_structure(model), eta)
    check = legendre_cross_check(lam, model.arrivals, 0.5, domain=eta)
    assert not check.applicable
