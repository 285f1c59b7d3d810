import numpy as np
import pytest

from src.maxplus_tails.core.recursion import (
    advance,
    default_margin,
    estimate_gamma,
    final_S_batch,
    forward_daters,
    sample_daters,
    sample_Z,
    segment_S,
    simulate_S,
    simulate_S_batch,
)
from src.maxplus_tails.errors import InstabilityError
from src.maxplus_tails.models.library import builtin, resequencing
from src.maxplus_tails.models.maxplus import MaxPlusMatrix
from src.maxplus_tails.models.network import ArrivalSpec, Deterministic, Exponential
from src.maxplus_tails.utils.streams import Streams


def test_resequencing_release_times_by_hand():
    model, _ = resequencing(
        Deterministic(5.0), Deterministic(1.0), 0.5, ArrivalSpec(Exponential(1.0))
    )
    up, down = [0.0, 5.0, 0.0], [0.0, 0.0, 1.0]
    state = MaxPlusMatrix.bottom(4, 1)
    releases = []
    for sigma, t in ((up, 0.0), (down, 1.0), (down, 2.0)):
        a, b = model.realize(sigma)
        state = advance(a, b, state, t)
        releases.append(state[3, 0])
    # packets 2 and 3 wait behind packet 1
    assert releases == [5.0, 5.0, 5.0]
    assert state.column_values() == (2.0, 5.0, 3.0, 5.0)


def test_incremental_S_matches_direct_products(fork_join):
    model, _ = fork_join
    path = simulate_S(model, 6, np.random.default_rng(4))
    matrices = path.matrices(model)
    for v in range(7):
        assert segment_S(model, path, 0, v, matrices) == pytest.approx(path.s_values[v])


def test_single_server_S_is_max_of_suffix_sums(mm1):
    model, _ = mm1
    path = simulate_S(model, 10, np.random.default_rng(8))
    sigma = path.sigma[:, 0]
    for n in range(11):
        expected = max(sigma[k : n + 1].sum() for k in range(n + 1))
        assert path.s_values[n] == pytest.approx(expected)


def test_S_is_nondecreasing(tandem_identical):
    model, _ = tandem_identical
    path = simulate_S(model, 50, np.random.default_rng(1))
    assert np.all(np.diff(path.s_values) >= -1e-12)


def test_batch_and_final_S_agree(tandem_independent):
    model, _ = tandem_independent
    full = simulate_S_batch(model, 12, 200, np.random.default_rng(6))
    last = final_S_batch(model, 12, 200, np.random.default_rng(6))
    assert np.array_equal(full[:, -1], last)
    assert np.all(np.diff(full, axis=1) >= -1e-12)


def test_forward_daters_of_dd1_are_service_time():
    model, _ = builtin("single_server", "deterministic", "deterministic", mu=1.0, lam=0.5)
    daters = forward_daters(model, 5, np.random.default_rng(0))
    assert np.allclose(daters, 1.0)


def test_dd1_maximal_dater_is_exact():
    model, _ = builtin("single_server", "deterministic", "deterministic", mu=1.0, lam=0.5)
    sample = sample_Z(model, np.random.default_rng(0), default_margin(1.0, 2.0))
    assert sample.converged
    assert sample.z == pytest.approx(1.0)


def test_mm1_dater_mean_is_sojourn_mean(mm1):
    model, _ = mm1
    batch = sample_daters(model, 4000, Streams(3), default_margin(1.0, 2.0), block_size=1000)
    assert batch.censored == 0
    # sojourn time of M/M/1 with mu=1, lambda=0.5 is Exp(0.5)
    assert batch.z.mean() == pytest.approx(2.0, abs=0.2)
    assert np.all(batch.z >= 0)


def test_daters_do_not_depend_on_thread_count(tandem_independent):
    model, _ = tandem_independent
    margin = default_margin(1.0, 2.0)
    one = sample_daters(model, 600, Streams(5), margin, threads=1, block_size=200)
    three = sample_daters(model, 600, Streams(5), margin, threads=3, block_size=200)
    assert np.array_equal(one.z, three.z)
    assert np.array_equal(one.horizon_used, three.horizon_used)


def test_truncated_daters_are_flagged(mm1):
    model, _ = mm1
    batch = sample_daters(model, 50, Streams(2), default_margin(1.0, 2.0), max_horizon=80)
    assert batch.censored == 50
    assert np.all(batch.horizon_used == 80)


def test_gamma_estimate_for_tandem(tandem_independent):
    model, _ = tandem_independent
    estimate = estimate_gamma(model, 200, 64, Streams(1))
    assert estimate.gamma == pytest.approx(1.0, abs=0.1)
    assert estimate.stable


def test_margin_rejects_unstable_gamma():
    with pytest.raises(InstabilityError):
        default_margin(2.0, 1.0)


def realized_arrays(model, horizon, size, rng):
    """A_k and B_k for k = 0..horizon with -inf for BOTTOM, drawn as simulate_S_batch draws them."""
    a = np.full((horizon + 1, size, model.s, model.s), -np.inf)
    b = np.full((horizon + 1, size, model.s), -np.inf)
    for k in range(horizon + 1):
        realized = model.evaluate_batch(model.sample_components(rng, size))
        for i, row in enumerate(realized.a_rows):
            for j, values in row:
                a[k, :, i, j] = values
        for i, values in enumerate(realized.b):
            if values is not None:
                b[k, :, i] = values
    return a, b


def segment_table(a, b):
    """table[:, u, v] = S_[u,v], each row u by the forward recursion started at u."""
    horizon, size = a.shape[0] - 1, a.shape[1]
    table = np.full((size, horizon + 1, horizon + 1), np.nan)
    for u in range(horizon + 1):
        values = b[u]
        table[:, u, u] = values.max(axis=1)
        for v in range(u + 1, horizon + 1):
            values = np.maximum((a[v] + values[:, None, :]).max(axis=2), b[v])
            table[:, u, v] = values.max(axis=1)
    return table


@pytest.mark.parametrize("name", ["tandem_independent", "fork_join", "resequencing"])
def test_segments_are_subadditive_and_enveloped(name):
    model, _ = builtin(name)
    horizon, size = 64, 1000
    a, b = realized_arrays(model, horizon, size, np.random.default_rng(21))
    table = segment_table(a, b)
    batch = simulate_S_batch(model, horizon, size, np.random.default_rng(21))
    np.testing.assert_allclose(table[:, 0, :], batch, rtol=1e-12)

    for v in range(1, horizon + 1):
        for n in range(v):
            assert np.all(table[:, 0, v] <= table[:, 0, n] + table[:, n + 1, v] + 1e-9), (n, v)

    tops = b.max(axis=2).T
    assert np.all(batch >= tops[:, :1] - 1e-12)
    assert np.all(batch >= tops - 1e-12)
    assert np.all(batch <= np.cumsum(tops, axis=1) + 1e-9)


def test_direct_segments_split_subadditively(fork_join):
    model, _ = fork_join
    path = simulate_S(model, 8, np.random.default_rng(13))
    matrices = path.matrices(model)
    for v in range(1, 9):
        whole = segment_S(model, path, 0, v, matrices)
        for n in range(v):
            head = segment_S(model, path, 0, n, matrices)
            tail = segment_S(model, path, n + 1, v, matrices)
            assert head == pytest.approx(path.s_values[n])
            assert whole <= head + tail + 1e-9


def test_arrival_shift_leaves_daters_unchanged(tandem_independent):
    model, _ = tandem_independent
    base = forward_daters(model, 50, np.random.default_rng(17))
    shifted = forward_daters(model, 50, np.random.default_rng(17), start_time=7.5)
    np.testing.assert_allclose(shifted, base, atol=1e-9)


def test_resequencing_step_clones_exactly_one_path(resequencing):
    model, _ = resequencing
    rng = np.random.default_rng(9)
    up = 0
    for _ in range(400):
        a, _ = model.sample_step(rng)
        upper, lower = a[1, 1], a[2, 2]
        assert (upper == 0.0) != (lower == 0.0)
        up += upper > 0.0
    assert 0.6 < up / 400 < 0.8


def test_exponential_entry_mean():
    model, _ = builtin("mm1", mu=2.0, lam=0.5)
    draws = model.sample_components(np.random.default_rng(31), 100_000)[:, 0]
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - 0.5) <= 3 * se


def test_same_seed_gives_same_realization(fork_join):
    model, _ = fork_join
    first = model.sample_step(np.random.default_rng(42))
    second = model.sample_step(np.random.default_rng(42))
    assert first == second


@pytest.mark.parametrize(
    "name", ["mm1", "tandem_identical", "tandem_independent", "fork_join", "resequencing"]
)
def test_rows_of_a_peak_at_b_on_sampled_draws(name):
    model, _ = builtin(name)
    rng = np.random.default_rng(3)
    for _ in range(1000):
        a, b = model.sample_step(rng)
        for i in range(model.s):
            assert max(a[i, j] for j in range(model.s)) == max(b[i, 0], 0.0)
