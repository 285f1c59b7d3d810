import numpy as np
import pytest

from src.maxplus_tails.utils.pool import concat_blocks, map_blocks
from src.maxplus_tails.utils.streams import PURPOSE_DATERS, PURPOSE_PATHS, Streams, block_sizes


def test_block_sizes():
    assert block_sizes(10, 4) == [4, 4, 2]
    assert block_sizes(8, 4) == [4, 4]
    assert block_sizes(3, 10) == [3]
    with pytest.raises(ValueError):
        block_sizes(0, 4)
    with pytest.raises(ValueError):
        block_sizes(4, 0)


def test_streams_are_reproducible():
    first = Streams(7).child(PURPOSE_PATHS).stream(3).random(5)
    second = Streams(7).child(PURPOSE_PATHS).stream(3).random(5)
    np.testing.assert_array_equal(first, second)


def test_purposes_and_indices_are_independent():
    streams = Streams(7)
    paths = streams.child(PURPOSE_PATHS).stream(0).random(5)
    daters = streams.child(PURPOSE_DATERS).stream(0).random(5)
    other_block = streams.child(PURPOSE_PATHS).stream(1).random(5)
    assert not np.array_equal(paths, daters)
    assert not np.array_equal(paths, other_block)


def test_negative_seed_is_rejected():
    with pytest.raises(ValueError):
        Streams(-1)


def _first_draws(size, rng):
    return rng.random(size)


@pytest.mark.parametrize("threads", [1, 4])
def test_map_blocks_keeps_block_order(threads):
    streams = Streams(3)
    parts = map_blocks(_first_draws, 10, streams, threads=threads, block_size=3)
    assert [len(part) for part in parts] == [3, 3, 3, 1]
    for index, part in enumerate(parts):
        np.testing.assert_array_equal(part, streams.stream(index).random(len(part)))


def test_results_do_not_depend_on_threads():
    serial = concat_blocks(_first_draws, 1000, Streams(5), threads=1, block_size=128)
    parallel = concat_blocks(_first_draws, 1000, Streams(5), threads=3, block_size=128)
    assert serial.shape == (1000,)
    np.testing.assert_array_equal(serial, parallel)
