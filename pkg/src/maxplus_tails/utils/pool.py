"""Replica-parallel worker pool."""

import asyncio
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar

import numpy as np

from src.maxplus_tails.utils.logging import setup_logger
from src.maxplus_tails.utils.streams import Streams, block_sizes

logger = setup_logger("maxplus-tails.pool")

T = TypeVar("T")

DEFAULT_BLOCK_SIZE = 4096


async def _gather_blocks(
    job: Callable[[int, np.random.Generator], T],
    sizes: List[int],
    streams: Streams,
    threads: int,
) -> List[T]:
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [
            loop.run_in_executor(executor, job, size, streams.stream(index))
            for index, size in enumerate(sizes)
        ]
        # gather keeps submission order, so aggregation never depends on timing
        return list(await asyncio.gather(*futures))


def map_blocks(
    job: Callable[[int, np.random.Generator], T],
    replicas: int,
    streams: Streams,
    threads: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> List[T]:
    """
    Run ``job(size, rng)`` once per replica block and return results in block order.

    Args:
        job: Callable simulating ``size`` replicas with the given generator
        replicas: Total number of replicas
        streams: Stream family; block ``b`` uses ``streams.stream(b)``
        threads: Worker count (results do not depend on it)
        block_size: Replicas per block

    Returns:
        List of per-block results
    """
    sizes = block_sizes(replicas, block_size)
    if threads <= 1 or len(sizes) == 1:
        return [job(size, streams.stream(index)) for index, size in enumerate(sizes)]

    logger.debug(f"Dispatching {len(sizes)} blocks to {threads} workers")
    return asyncio.run(_gather_blocks(job, sizes, streams, threads))


def concat_blocks(
    job: Callable[[int, np.random.Generator], np.ndarray],
    replicas: int,
    streams: Streams,
    threads: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> np.ndarray:
    """Like :func:`map_blocks` for array-valued jobs, concatenated along axis 0."""
    parts = map_blocks(job, replicas, streams, threads, block_size)
    return np.concatenate(parts, axis=0)
