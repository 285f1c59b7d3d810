"""Constructors for the standard example networks, each with its known facts."""

import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple, Union

from src.maxplus_tails.errors import ConfigError
from src.maxplus_tails.models.network import (
    ArrivalSpec,
    CoinSpec,
    ComponentSpec,
    Deterministic,
    Distribution,
    EntryExpression,
    Exponential,
    NetworkModel,
)

SHARED = "shared"
ROUTING_COIN = 1

Service = Union[Distribution, ComponentSpec]

BOT = EntryExpression.neg_inf()
ZERO = EntryExpression.zero()
poly = EntryExpression.poly
single = EntryExpression.single


@dataclass(frozen=True)
class ModelFacts:
    """Known analytic results for a constructed model; None where none is known."""

    expected_eta: Optional[float]
    expected_theta_star: Optional[float]
    expected_classes: Tuple[Tuple[int, ...], ...]
    source: str
    expected_p_star: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "expected_eta": self.expected_eta,
            "expected_theta_star": self.expected_theta_star,
            "expected_classes": [[i + 1 for i in cls] for cls in self.expected_classes],
            "expected_p_star": self.expected_p_star,
            "source": self.source,
        }


def _dist(service: Service) -> Distribution:
    return service.dist if isinstance(service, ComponentSpec) else service


def _rate(dist: Distribution) -> Optional[float]:
    return dist.rate if isinstance(dist, Exponential) else None


def _arrival_rate(arrivals: ArrivalSpec) -> Optional[float]:
    return _rate(arrivals.dist)


def single_server(service: Service, arrivals: ArrivalSpec) -> Tuple[NetworkModel, ModelFacts]:
    """FIFO ./G/1 queue: A = [[sigma]], B = [sigma] (Lindley's recursion)."""
    dist = _dist(service)
    model = NetworkModel(
        s=1,
        components=(ComponentSpec(1, dist),),
        a=((single(1),),),
        b=(single(1),),
        arrivals=arrivals,
        name="single_server",
        metadata={"family": "single_server"},
    )
    mu, lam = _rate(dist), _arrival_rate(arrivals)
    theta = None
    if mu is not None and lam is not None:
        theta = mu - lam
    elif dist.is_deterministic and arrivals.dist.is_deterministic and dist.mean < arrivals.mean:
        theta = math.inf
    facts = ModelFacts(
        expected_eta=dist.mgf_threshold,
        expected_theta_star=theta,
        expected_classes=((0,),),
        source="Lindley recursion; M/M/1 decay rate mu - lambda",
    )
    return model, facts


def tandem(
    s1: Service, s2: Union[Service, str], arrivals: ArrivalSpec
) -> Tuple[NetworkModel, ModelFacts]:
    """
    Two queues in tandem.

    With ``s2=SHARED`` both stations use one component, i.e. a customer has the
    same service time at both.
    """
    d1 = _dist(s1)
    mu1, lam = _rate(d1), _arrival_rate(arrivals)

    if isinstance(s2, str):
        if s2 != SHARED:
            raise ValueError(f"s2 must be a service law or {SHARED!r}")
        model = NetworkModel(
            s=2,
            components=(ComponentSpec(1, d1),),
            a=((single(1), BOT), (poly((1, 1)), single(1))),
            b=(single(1), poly((1, 1))),
            arrivals=arrivals,
            name="tandem_identical",
            metadata={"family": "tandem", "shared": True},
        )
        eta = d1.mgf_threshold / 2.0
        theta = min(mu1 / 2.0, mu1 - lam) if mu1 is not None and lam is not None else None
        return model, ModelFacts(
            expected_eta=eta,
            expected_theta_star=theta,
            expected_classes=((0,), (1,)),
            source="identical exponential tandem: theta* = mu/2 for lambda <= mu/2, mu - lambda above",
        )

    d2 = _dist(s2)
    mu2 = _rate(d2)
    model = NetworkModel(
        s=2,
        components=(ComponentSpec(1, d1), ComponentSpec(2, d2)),
        a=((single(1), BOT), (poly((1, 2)), single(2))),
        b=(single(1), poly((1, 2))),
        arrivals=arrivals,
        name="tandem_independent",
        metadata={"family": "tandem", "shared": False},
    )
    theta = None
    if mu1 is not None and mu2 is not None and lam is not None:
        theta = min(mu1 - lam, mu2 - lam)
    return model, ModelFacts(
        expected_eta=min(d1.mgf_threshold, d2.mgf_threshold),
        expected_theta_star=theta,
        expected_classes=((0,), (1,)),
        source="independent tandem: theta* = min of the two single-server rates",
    )


def fork_join_skeleton() -> Tuple[tuple, tuple]:
    """Symbolic A and B of the four-node fork and join network."""
    join = poly((1, 2), (1, 3))
    a = (
        (single(1), BOT, BOT, BOT),
        (poly((1, 2)), single(2), BOT, BOT),
        (poly((1, 3)), BOT, single(3), BOT),
        (join, single(2), single(3), ZERO),
    )
    b = (single(1), poly((1, 2)), poly((1, 3)), join)
    return a, b


def fork_join(
    s1: Service, s2: Service, s3: Service, arrivals: ArrivalSpec
) -> Tuple[NetworkModel, ModelFacts]:
    """Node 1 forks to nodes 2 and 3; node 4 joins them with zero service."""
    dists = [_dist(s) for s in (s1, s2, s3)]
    a, b = fork_join_skeleton()
    model = NetworkModel(
        s=4,
        components=tuple(ComponentSpec(k + 1, d) for k, d in enumerate(dists)),
        a=a,
        b=b,
        arrivals=arrivals,
        name="fork_join",
        metadata={"family": "fork_join"},
    )
    rates = [_rate(d) for d in dists]
    lam = _arrival_rate(arrivals)
    theta = None
    if lam is not None and all(r is not None for r in rates):
        theta = min(r - lam for r in rates)
    return model, ModelFacts(
        expected_eta=min(d.mgf_threshold for d in dists),
        expected_theta_star=theta,
        expected_classes=((0,), (1,), (2,), (3,)),
        source="fork and join with independent services: theta* = min of per-node rates",
    )


ROUTING_EDGE = 1e-9


def routing_optimum(mu2: float, mu3: float, lam: float) -> Tuple[float, float, bool]:
    """
    (p*, theta*, attained) of the exponential two-path network.

    p* is clamped to the stable interval, then kept ROUTING_EDGE inside (0, 1).
    ``attained`` is False when the supremum of theta*(p) sits at p = 0 or p = 1;
    theta* is then the value at the returned p, just below that supremum.
    """
    low = max(0.0, 1.0 - mu3 / lam)
    high = min(1.0, mu2 / lam)
    p = min(max(((mu2 - mu3) / lam + 1.0) / 2.0, low), high)
    attained = 0.0 < p < 1.0
    p = min(max(p, ROUTING_EDGE), 1.0 - ROUTING_EDGE)
    return p, min(mu2 - lam * p, mu3 - lam * (1.0 - p)), attained


def resequencing(
    zeta2: Service,
    zeta3: Service,
    p: float,
    arrivals: ArrivalSpec,
    zeta1: Optional[Service] = None,
) -> Tuple[NetworkModel, ModelFacts]:
    """
    Two-path network with a resequencing buffer, encoded with clones.

    Each packet goes up (node 2) with probability ``p`` and down (node 3)
    otherwise; the other path receives a zero-service clone. Node 4 releases
    packets in order.
    """
    if not 0 < p < 1:
        raise ValueError(f"Routing probability must be in (0,1), got {p}")
    d1 = Deterministic(0.0) if zeta1 is None else _dist(zeta1)
    d2, d3 = _dist(zeta2), _dist(zeta3)
    a, b = fork_join_skeleton()
    model = NetworkModel(
        s=4,
        components=(
            ComponentSpec(1, d1),
            ComponentSpec(2, d2, CoinSpec(ROUTING_COIN, 2, p)),
            ComponentSpec(3, d3, CoinSpec(ROUTING_COIN, 3, p)),
        ),
        a=a,
        b=b,
        arrivals=arrivals,
        name="resequencing",
        metadata={"family": "resequencing", "p": p},
    )
    mu2, mu3, lam = _rate(d2), _rate(d3), _arrival_rate(arrivals)
    theta = p_star = None
    if mu2 is not None and mu3 is not None and lam is not None and d1 == Deterministic(0.0):
        theta = min(mu2 - lam * p, mu3 - lam * (1.0 - p))
        p_star, _, _ = routing_optimum(mu2, mu3, lam)
    return model, ModelFacts(
        expected_eta=min(d1.mgf_threshold, d2.mgf_threshold, d3.mgf_threshold),
        expected_theta_star=theta,
        expected_classes=((0,), (1,), (2,), (3,)),
        source="resequencing with clones: theta_2 = mu2 - lambda p, theta_3 = mu3 - lambda (1 - p)",
        expected_p_star=p_star,
    )


BUILTIN_DEFAULTS: Dict[str, Dict[str, float]] = {
    "mm1": {"mu": 1.0, "lam": 0.5},
    "single_server": {"mu": 1.0, "lam": 0.5},
    "tandem_identical": {"mu": 1.0, "lam": 0.4},
    "tandem_independent": {"mu1": 1.0, "mu2": 1.5, "lam": 0.5},
    "fork_join": {"mu1": 1.0, "mu2": 0.8, "mu3": 1.2, "lam": 0.5},
    "resequencing": {"mu2": 1.2, "mu3": 0.8, "lam": 1.0, "p": 0.7},
}


def _law(rate: float, kind: str) -> Distribution:
    if not rate > 0:
        raise ValueError(f"rates must be positive, got {rate}")
    if kind == "exponential":
        return Exponential(rate)
    if kind == "deterministic":
        return Deterministic(1.0 / rate)
    raise ConfigError(f"unknown law {kind!r}")


def builtin(
    name: str,
    service_kind: str = "exponential",
    arrival_kind: str = "exponential",
    **params: Optional[float],
) -> Tuple[NetworkModel, ModelFacts]:
    """
    Construct a bundled model by name.

    Rates default to BUILTIN_DEFAULTS[name]; ``deterministic`` kinds use the
    constant time 1/rate.

    Raises:
        ConfigError: On an unknown name, a parameter the family does not take,
            or an invalid value
    """
    if name not in BUILTIN_DEFAULTS:
        raise ConfigError(f"unknown builtin {name!r}; choose from {sorted(BUILTIN_DEFAULTS)}")
    values = dict(BUILTIN_DEFAULTS[name])
    for key, value in params.items():
        if value is None:
            continue
        if key not in values:
            raise ConfigError(f"builtin {name} takes {sorted(values)}, not {key}")
        values[key] = float(value)
    if name == "mm1":
        service_kind = arrival_kind = "exponential"

    try:
        lam = values["lam"]
        arrivals = ArrivalSpec(_law(lam, arrival_kind))
        if name in ("mm1", "single_server"):
            model, facts = single_server(_law(values["mu"], service_kind), arrivals)
        elif name == "tandem_identical":
            model, facts = tandem(_law(values["mu"], service_kind), SHARED, arrivals)
        elif name == "tandem_independent":
            model, facts = tandem(
                _law(values["mu1"], service_kind), _law(values["mu2"], service_kind), arrivals
            )
        elif name == "fork_join":
            model, facts = fork_join(
                *(_law(values[k], service_kind) for k in ("mu1", "mu2", "mu3")), arrivals
            )
        else:
            model, facts = resequencing(
                _law(values["mu2"], service_kind),
                _law(values["mu3"], service_kind),
                values["p"],
                arrivals,
            )
    except ValueError as e:
        raise ConfigError(f"builtin {name}: {e}") from e
    return replace(model, name=name, metadata={**model.metadata, "parameters": values}), facts
