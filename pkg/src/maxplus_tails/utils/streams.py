"""Seeded, splittable random streams for reproducible simulation."""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

# Purpose labels keep independent uses of one master seed apart.
PURPOSE_PATHS = 1
PURPOSE_GAMMA = 2
PURPOSE_DATERS = 3
PURPOSE_BOOTSTRAP = 4
PURPOSE_CHECKS = 5


class Streams:
    """
    Counter-based stream family derived from a master seed.

    Every stream is a Philox generator keyed by ``(seed, spawn_key)``. A stream
    index never depends on how many other streams were drawn, so replica block
    ``b`` sees the same draws whatever the total replica count.
    """

    def __init__(self, seed: int, spawn_key: Tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self._seed = int(seed)
        self._spawn_key = tuple(int(k) for k in spawn_key)

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def spawn_key(self) -> Tuple[int, ...]:
        return self._spawn_key

    def child(self, label: int) -> Streams:
        """Derive an independent stream family for a sub-task."""
        return Streams(self._seed, self._spawn_key + (label,))

    def stream(self, index: int) -> np.random.Generator:
        """Return the generator for stream ``index``."""
        sequence = np.random.SeedSequence(
            self._seed, spawn_key=self._spawn_key + (int(index),)
        )
        return np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"Streams(seed={self._seed}, spawn_key={self._spawn_key})"


def block_sizes(replicas: int, block_size: int) -> List[int]:
    """Split ``replicas`` into full blocks of ``block_size`` plus a remainder."""
    if replicas < 1:
        raise ValueError(f"replicas must be positive, got {replicas}")
    if block_size < 1:
        raise ValueError(f"block_size must be positive, got {block_size}")
    full, rest = divmod(replicas, block_size)
    sizes = [block_size] * full
    if rest:
        sizes.append(rest)
    return sizes
