import math

import pytest

from src.maxplus_tails.errors import ConfigError
from src.maxplus_tails.models.library import builtin, routing_optimum
from src.maxplus_tails.models.network import Deterministic, Exponential


def test_mm1_facts():
    model, facts = builtin("mm1", mu=2.0, lam=0.5)
    assert model.name == "mm1"
    assert facts.expected_theta_star == pytest.approx(1.5)
    assert facts.expected_eta == pytest.approx(2.0)
    assert model.metadata["parameters"] == {"mu": 2.0, "lam": 0.5}


def test_mm1_ignores_law_kinds():
    model, _ = builtin("mm1", "deterministic", "deterministic")
    assert isinstance(model.components[0].dist, Exponential)
    assert isinstance(model.arrivals.dist, Exponential)


def test_deterministic_single_server_has_infinite_rate():
    model, facts = builtin("single_server", "deterministic", "deterministic", mu=1.0, lam=0.5)
    assert model.components[0].dist == Deterministic(1.0)
    assert model.arrivals.mean == pytest.approx(2.0)
    assert math.isinf(facts.expected_theta_star)


@pytest.mark.parametrize(
    "lam, expected", [(0.2, 0.5), (0.5, 0.5), (0.8, pytest.approx(0.2))]
)
def test_identical_tandem_facts(lam, expected):
    _, facts = builtin("tandem_identical", mu=1.0, lam=lam)
    assert facts.expected_theta_star == expected
    assert facts.expected_eta == pytest.approx(0.5)


def test_fork_join_facts_are_one_based():
    _, facts = builtin("fork_join")
    payload = facts.to_dict()
    assert payload["expected_classes"] == [[1], [2], [3], [4]]
    assert payload["expected_theta_star"] == pytest.approx(0.3)


def test_routing_optimum_closed_form():
    assert routing_optimum(1.0, 1.0, 1.0) == (pytest.approx(0.5), pytest.approx(0.5), True)
    p, theta, attained = routing_optimum(1.2, 0.8, 1.0)
    assert p == pytest.approx(0.7)
    assert theta == pytest.approx(0.5)
    assert attained


@pytest.mark.parametrize("mu2, mu3, edge", [(3.0, 0.5, 1.0), (0.5, 3.0, 0.0)])
def test_routing_optimum_at_an_edge_is_not_attained(mu2, mu3, edge):
    p, theta, attained = routing_optimum(mu2, mu3, 1.0)
    assert 0.0 < p < 1.0
    assert p == pytest.approx(edge, abs=1e-6)
    assert theta == pytest.approx(0.5, abs=1e-6)
    assert theta < 0.5
    assert not attained


@pytest.mark.parametrize(
    "name, params",
    [
        ("erlang_loss", {}),
        ("mm1", {"mu2": 1.0}),
        ("tandem_independent", {"mu1": -1.0}),
        ("resequencing", {"p": 1.5}),
    ],
)
def test_bad_builtin_requests(name, params):
    with pytest.raises(ConfigError):
        builtin(name, **params)
