"""Estimation settings: seed, horizons, replica counts and the tail window."""

from dataclasses import asdict, dataclass, replace
from typing import Optional, Tuple

from src.maxplus_tails.utils.pool import DEFAULT_BLOCK_SIZE
from src.maxplus_tails.utils.streams import Streams


@dataclass(frozen=True)
class EstimationSettings:
    """Monte Carlo parameters shared by the estimation engines."""

    seed: int = 0
    n: int = 64
    replicas: int = 100_000
    threads: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE
    theta_max: Optional[float] = None
    grid_points: int = 32
    gamma_horizon: int = 2_000
    gamma_replicas: int = 256
    tail_replicas: int = 100_000
    quantile_window: Tuple[float, float] = (0.95, 0.999)
    max_horizon: int = 1_000_000
    bootstrap: int = 200

    @property
    def streams(self) -> Streams:
        return Streams(self.seed)

    def with_changes(self, **changes) -> "EstimationSettings":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["quantile_window"] = list(self.quantile_window)
        return payload
