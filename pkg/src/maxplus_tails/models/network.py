"""Symbolic stochastic (max,plus)-linear network models."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from src.maxplus_tails.errors import ModelConfigError
from src.maxplus_tails.models.maxplus import BOTTOM, MaxPlusMatrix, MaxPlusValue


class Distribution(ABC):
    """Law of a non-negative random time."""

    kind: str = ""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` i.i.d. values."""

    @property
    @abstractmethod
    def mean(self) -> float:
        """Expected value."""

    @abstractmethod
    def log_mgf(self, theta: float) -> float:
        """log E[exp(theta X)], ``math.inf`` where the moment diverges."""

    @property
    @abstractmethod
    def mgf_threshold(self) -> float:
        """sup{theta : E[exp(theta X)] < inf}; ``math.inf`` for bounded laws."""

    @abstractmethod
    def to_config(self) -> dict:
        """JSON form used in model configs."""

    @property
    def is_deterministic(self) -> bool:
        return False


@dataclass(frozen=True)
class Deterministic(Distribution):
    value: float
    kind = "deterministic"

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"Deterministic value must be finite and >= 0, got {self.value}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))

    @property
    def mean(self) -> float:
        return float(self.value)

    def log_mgf(self, theta: float) -> float:
        return theta * self.value

    @property
    def mgf_threshold(self) -> float:
        return math.inf

    def to_config(self) -> dict:
        return {"type": self.kind, "value": self.value}

    @property
    def is_deterministic(self) -> bool:
        return True


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float
    kind = "exponential"

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate) or self.rate <= 0:
            raise ValueError(f"Exponential rate must be positive, got {self.rate}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size)

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def log_mgf(self, theta: float) -> float:
        if theta >= self.rate:
            return math.inf
        return -math.log1p(-theta / self.rate)

    @property
    def mgf_threshold(self) -> float:
        return float(self.rate)

    def to_config(self) -> dict:
        return {"type": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class Uniform(Distribution):
    low: float
    high: float
    kind = "uniform"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ValueError("Uniform bounds must be finite")
        if self.low < 0 or self.high < self.low:
            raise ValueError(
                f"Uniform bounds must satisfy 0 <= low <= high, got ({self.low}, {self.high})"
            )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size)

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def log_mgf(self, theta: float) -> float:
        x = theta * (self.high - self.low)
        if x == 0:
            return theta * self.low
        if x > 0:
            return theta * self.high + math.log(-math.expm1(-x) / x)
        return theta * self.low + math.log(math.expm1(x) / x)

    @property
    def mgf_threshold(self) -> float:
        return math.inf

    def to_config(self) -> dict:
        return {"type": self.kind, "low": self.low, "high": self.high}

    @property
    def is_deterministic(self) -> bool:
        return self.low == self.high


@dataclass(frozen=True)
class BernoulliModulated(Distribution):
    """``inner * 1{coin}`` where the coin is up with probability ``activation``."""

    activation: float
    inner: Distribution
    kind = "bernoulli_modulated"

    def __post_init__(self) -> None:
        if not 0 < self.activation < 1:
            raise ValueError(f"Activation probability must be in (0,1), got {self.activation}")
        if isinstance(self.inner, BernoulliModulated):
            raise ValueError("Nested Bernoulli modulation is not supported")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        up = rng.random(size) < self.activation
        return self.inner.sample(rng, size) * up

    @property
    def mean(self) -> float:
        return self.activation * self.inner.mean

    def log_mgf(self, theta: float) -> float:
        inner = self.inner.log_mgf(theta)
        if math.isinf(inner):
            return math.inf
        return float(
            np.logaddexp(math.log(self.activation) + inner, math.log1p(-self.activation))
        )

    @property
    def mgf_threshold(self) -> float:
        return self.inner.mgf_threshold

    def to_config(self) -> dict:
        return {"type": self.kind, "p": self.activation, "inner": self.inner.to_config()}


@dataclass(frozen=True)
class CoinSpec:
    """Per-step routing coin: branch 2 is taken with probability ``p``, branch 3 otherwise."""

    id: int
    branch: int
    p: float

    def __post_init__(self) -> None:
        if self.branch not in (2, 3):
            raise ValueError(f"Coin branch must be 2 or 3, got {self.branch}")
        if not 0 < self.p < 1:
            raise ValueError(f"Coin probability must be in (0,1), got {self.p}")

    @property
    def activation(self) -> float:
        return self.p if self.branch == 2 else 1.0 - self.p


@dataclass(frozen=True)
class ComponentSpec:
    """Component time sigma^(index): ``dist``, optionally gated by a shared coin."""

    index: int
    dist: Distribution
    coin: Optional[CoinSpec] = None

    @property
    def distribution(self) -> Distribution:
        """Marginal law of the component."""
        if self.coin is None:
            return self.dist
        return BernoulliModulated(self.coin.activation, self.dist)


@dataclass(frozen=True)
class ArrivalSpec:
    """I.i.d. interarrival times tau_n."""

    dist: Distribution

    def __post_init__(self) -> None:
        if isinstance(self.dist, BernoulliModulated):
            raise ValueError("Interarrival times cannot be Bernoulli modulated")
        if not self.dist.mean > 0:
            raise ValueError("Interarrival mean must be positive")

    @property
    def mean(self) -> float:
        return self.dist.mean

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.dist.sample(rng, size)

    def log_mgf(self, theta: float) -> float:
        return self.dist.log_mgf(theta)

    @classmethod
    def poisson(cls, rate: float) -> ArrivalSpec:
        return cls(Exponential(rate))


class EntryKind(str, Enum):
    NEG_INF = "NEG_INF"
    CONST_ZERO = "CONST_ZERO"
    POLY = "POLY"


Term = Tuple[int, ...]


@dataclass(frozen=True)
class EntryExpression:
    """
    Matrix entry: BOTTOM, the constant 0, or ⊕_j ⊗_{k in term_j} sigma^(k).

    Terms are sorted tuples of 1-based component ids; a repeated id means the
    same component counted more than once.
    """

    kind: EntryKind
    terms: Tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is EntryKind.POLY:
            if not self.terms or any(len(term) == 0 for term in self.terms):
                raise ValueError("POLY entries need non-empty terms")
            normal = tuple(sorted(tuple(sorted(term)) for term in self.terms))
            object.__setattr__(self, "terms", normal)
        elif self.terms:
            raise ValueError(f"{self.kind.value} entries carry no terms")

    @classmethod
    def neg_inf(cls) -> EntryExpression:
        return cls(EntryKind.NEG_INF)

    @classmethod
    def zero(cls) -> EntryExpression:
        return cls(EntryKind.CONST_ZERO)

    @classmethod
    def poly(cls, *terms: Sequence[int]) -> EntryExpression:
        return cls(EntryKind.POLY, tuple(tuple(t) for t in terms))

    @classmethod
    def single(cls, component: int) -> EntryExpression:
        return cls.poly((component,))

    @property
    def is_bottom(self) -> bool:
        return self.kind is EntryKind.NEG_INF

    @property
    def component_ids(self) -> FrozenSet[int]:
        return frozenset(k for term in self.terms for k in term)

    @property
    def single_component(self) -> Optional[int]:
        """The id when the entry is exactly sigma^(k), else None."""
        if self.kind is EntryKind.POLY and len(self.terms) == 1 and len(self.terms[0]) == 1:
            return self.terms[0][0]
        return None

    @property
    def has_unit_degree(self) -> bool:
        return all(len(set(term)) == len(term) for term in self.terms)

    def evaluate(self, sigma: np.ndarray) -> Optional[np.ndarray]:
        """
        Evaluate on a batch of component vectors.

        Args:
            sigma: Array of shape (size, K), column k-1 holding sigma^(k)

        Returns:
            Array of shape (size,), or None for BOTTOM entries
        """
        if self.kind is EntryKind.NEG_INF:
            return None
        if self.kind is EntryKind.CONST_ZERO:
            return np.zeros(sigma.shape[0])
        values = None
        for term in self.terms:
            total = sigma[:, term[0] - 1].copy()
            for k in term[1:]:
                total += sigma[:, k - 1]
            values = total if values is None else np.maximum(values, total)
        return values

    def evaluate_scalar(self, sigma: Sequence[float]) -> MaxPlusValue:
        if self.kind is EntryKind.NEG_INF:
            return BOTTOM
        if self.kind is EntryKind.CONST_ZERO:
            return 0.0
        return max(float(sum(sigma[k - 1] for k in term)) for term in self.terms)

    def normalized(self) -> FrozenSet[Term]:
        """
        Canonical max-of-sums form for non-negative components.

        Terms dominated (as multisets) by another term are dropped; the constant 0
        is the empty term. BOTTOM normalizes to the empty set.
        """
        if self.kind is EntryKind.NEG_INF:
            return frozenset()
        if self.kind is EntryKind.CONST_ZERO:
            return frozenset({()})
        return _maximal_terms(self.terms)

    def to_config(self):
        if self.kind is EntryKind.NEG_INF:
            return "-inf"
        if self.kind is EntryKind.CONST_ZERO:
            return "0"
        return {"max": [list(term) for term in self.terms]}

    def __str__(self) -> str:
        if self.kind is EntryKind.NEG_INF:
            return "-inf"
        if self.kind is EntryKind.CONST_ZERO:
            return "0"
        return " ⊕ ".join("⊗".join(f"σ{k}" for k in term) for term in self.terms)


def _dominates(big: Counter, small: Counter) -> bool:
    return all(big[k] >= count for k, count in small.items())


def _maximal_terms(terms: Sequence[Term]) -> FrozenSet[Term]:
    unique = sorted(set(tuple(sorted(t)) for t in terms), key=len, reverse=True)
    kept: List[Term] = []
    for term in unique:
        counts = Counter(term)
        if not any(_dominates(Counter(other), counts) for other in kept):
            kept.append(term)
    return frozenset(kept)


def merge_normalized(parts: Sequence[FrozenSet[Term]]) -> FrozenSet[Term]:
    """Normalized form of the ⊕ of already-normalized expressions."""
    return _maximal_terms([term for part in parts for term in part])


@dataclass
class RealizedBatch:
    """Entry values for a batch of i.i.d. steps; None marks BOTTOM entries."""

    a_rows: List[List[Tuple[int, np.ndarray]]]
    b: List[Optional[np.ndarray]]


@dataclass(frozen=True)
class UnitDegreeReport:
    """Outcome of the three structural conditions under which eta never binds."""

    holds: bool
    independence: bool
    diagonal_coverage: bool
    unit_degree: bool
    violations: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "independence": self.independence,
            "diagonal_coverage": self.diagonal_coverage,
            "unit_degree": self.unit_degree,
            "violations": list(self.violations),
        }


@dataclass(frozen=True)
class NetworkModel:
    """A complete problem instance: symbolic A (s×s), B (s×1), components and arrivals."""

    s: int
    components: Tuple[ComponentSpec, ...]
    a: Tuple[Tuple[EntryExpression, ...], ...]
    b: Tuple[EntryExpression, ...]
    arrivals: ArrivalSpec
    name: str = "model"
    metadata: Dict[str, object] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        self.validate()

    @property
    def K(self) -> int:
        return len(self.components)

    def validate(self) -> None:
        """
        Check the model invariants.

        Raises:
            ModelConfigError: With a path into the config for the first violation
        """
        if self.s < 1:
            raise ModelConfigError(f"dimension must be positive, got {self.s}", "s")
        if len(self.a) != self.s:
            raise ModelConfigError(f"expected {self.s} rows, got {len(self.a)}", "A")
        for i, row in enumerate(self.a):
            if len(row) != self.s:
                raise ModelConfigError(f"expected {self.s} entries, got {len(row)}", f"A[{i}]")
        if len(self.b) != self.s:
            raise ModelConfigError(f"expected {self.s} entries, got {len(self.b)}", "B")

        for position, component in enumerate(self.components):
            if component.index != position + 1:
                raise ModelConfigError(
                    f"component ids must be 1..K in order, found {component.index} at position {position}",
                    f"components[{position}].id",
                )

        coin_probabilities: Dict[int, float] = {}
        for position, component in enumerate(self.components):
            if component.coin is None:
                continue
            known = coin_probabilities.setdefault(component.coin.id, component.coin.p)
            if known != component.coin.p:
                raise ModelConfigError(
                    f"coin {component.coin.id} declared with probabilities {known} and {component.coin.p}",
                    f"components[{position}].coin.p",
                )

        for i, j, entry, path in self.iter_entries():
            for k in entry.component_ids:
                if not 1 <= k <= self.K:
                    raise ModelConfigError(
                        f"dangling component index {k} (K={self.K})", path
                    )
        for i in range(self.s):
            if self.a[i][i].is_bottom:
                raise ModelConfigError(
                    "diagonal entry is -inf, violating assumption (ST)", f"A[{i}][{i}]"
                )
        if all(entry.is_bottom for entry in self.b):
            raise ModelConfigError("B has no finite entry: the network has no input", "B")

    def iter_entries(self):
        """Yield ``(i, j, entry, path)`` for every entry of A and B (j is None for B)."""
        for i, row in enumerate(self.a):
            for j, entry in enumerate(row):
                yield i, j, entry, f"A[{i}][{j}]"
        for i, entry in enumerate(self.b):
            yield i, None, entry, f"B[{i}]"

    @property
    def coins(self) -> Dict[int, float]:
        """Coin id -> probability of branch 2."""
        found: Dict[int, float] = {}
        for component in self.components:
            if component.coin is not None:
                found.setdefault(component.coin.id, component.coin.p)
        return dict(sorted(found.items()))

    def support(self) -> List[List[bool]]:
        """support[i][j] is True where A[i][j] is not BOTTOM."""
        return [[not entry.is_bottom for entry in row] for row in self.a]

    def sample_components(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """
        Draw ``size`` i.i.d. component vectors, sharing coins within each vector.

        Returns:
            Array of shape (size, K)
        """
        up = {coin_id: rng.random(size) < p for coin_id, p in self.coins.items()}
        sigma = np.empty((size, self.K))
        for component in self.components:
            draws = component.dist.sample(rng, size)
            if component.coin is not None:
                taken = up[component.coin.id]
                if component.coin.branch == 3:
                    taken = ~taken
                draws = draws * taken
            sigma[:, component.index - 1] = draws
        return sigma

    def evaluate_batch(self, sigma: np.ndarray) -> RealizedBatch:
        a_rows = []
        for row in self.a:
            realized = []
            for j, entry in enumerate(row):
                values = entry.evaluate(sigma)
                if values is not None:
                    realized.append((j, values))
            a_rows.append(realized)
        return RealizedBatch(a_rows=a_rows, b=[entry.evaluate(sigma) for entry in self.b])

    def realize(self, sigma: Sequence[float]) -> Tuple[MaxPlusMatrix, MaxPlusMatrix]:
        """Evaluate A and B on one component vector (indexed by id - 1)."""
        if len(sigma) != self.K:
            raise ValueError(f"Expected {self.K} component values, got {len(sigma)}")
        a = MaxPlusMatrix(
            self.s,
            self.s,
            tuple(entry.evaluate_scalar(sigma) for row in self.a for entry in row),
        )
        b = MaxPlusMatrix(self.s, 1, tuple(entry.evaluate_scalar(sigma) for entry in self.b))
        return a, b

    def sample_step(self, rng: np.random.Generator) -> Tuple[MaxPlusMatrix, MaxPlusMatrix]:
        """One i.i.d. realization (A_n, B_n)."""
        return self.realize(self.sample_components(rng, 1)[0])

    def restricted(self, coords: Sequence[int]) -> List[List[EntryExpression]]:
        """The A block on ``coords`` × ``coords``."""
        return [[self.a[i][j] for j in coords] for i in coords]

    def with_coin_probability(self, coin_id: int, p: float) -> NetworkModel:
        if coin_id not in self.coins:
            raise KeyError(f"Model has no coin {coin_id}")
        components = tuple(
            replace(c, coin=replace(c.coin, p=p))
            if c.coin is not None and c.coin.id == coin_id
            else c
            for c in self.components
        )
        return replace(self, components=components)

    def with_arrivals(self, arrivals: ArrivalSpec) -> NetworkModel:
        return replace(self, arrivals=arrivals)

    def check_unit_max_degree(self) -> UnitDegreeReport:
        return check_unit_max_degree(self)


def check_unit_max_degree(model: NetworkModel) -> UnitDegreeReport:
    """
    Check the conditions under which eta cannot bind.

    1. components are independent: no routing coin shared by distinct components
       and no component driving several diagonal entries on its own;
    2. every component is alone on some diagonal entry of A;
    3. every non-constant entry of A and B is a max of sums of distinct components.
    """
    violations: List[str] = []

    independence = True
    by_coin: Dict[int, List[int]] = {}
    for component in model.components:
        if component.coin is not None:
            by_coin.setdefault(component.coin.id, []).append(component.index)
    for coin_id, members in sorted(by_coin.items()):
        if len(members) > 1:
            independence = False
            violations.append(
                f"components {members} share routing coin {coin_id} and are dependent"
            )

    diagonal_owner: Dict[int, List[int]] = {}
    for i in range(model.s):
        k = model.a[i][i].single_component
        if k is not None:
            diagonal_owner.setdefault(k, []).append(i)
    for k, rows in sorted(diagonal_owner.items()):
        if len(rows) > 1:
            independence = False
            violations.append(
                f"component {k} drives diagonal entries {[r + 1 for r in rows]}: "
                "the stations' times are one variable"
            )

    diagonal_coverage = True
    for component in model.components:
        if component.index not in diagonal_owner:
            diagonal_coverage = False
            violations.append(
                f"component {component.index} is not alone on any diagonal entry of A"
            )

    unit_degree = True
    for _, _, entry, path in model.iter_entries():
        if entry.kind is EntryKind.POLY and not entry.has_unit_degree:
            unit_degree = False
            violations.append(f"{path} = {entry} repeats a component")

    return UnitDegreeReport(
        holds=independence and diagonal_coverage and unit_degree,
        independence=independence,
        diagonal_coverage=diagonal_coverage,
        unit_degree=unit_degree,
        violations=tuple(violations),
    )


def sample_step(model: NetworkModel, rng: np.random.Generator) -> Tuple[MaxPlusMatrix, MaxPlusMatrix]:
    return model.sample_step(rng)
