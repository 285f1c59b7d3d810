import math

import numpy as np
import pytest

from src.maxplus_tails.core.mgf import (
    analytic_lambda_S,
    curve_from_samples,
    default_theta_grid,
    entry_log_mgf,
    entry_threshold,
    lambda_block_analytic,
    lambda_block_empirical,
    lambda_S_empirical,
    lambda_T,
    Z_95,
)
from src.maxplus_tails.core.recursion import estimate_gamma
from src.maxplus_tails.core.structure import analyze_structure
from src.maxplus_tails.models.library import poly, single
from src.maxplus_tails.models.network import ArrivalSpec, ComponentSpec, Exponential, NetworkModel
from src.maxplus_tails.utils.streams import Streams


def exp_lambda(rate, theta):
    return -math.log1p(-theta / rate)


def test_lambda_T_of_poisson_arrivals():
    arrivals = ArrivalSpec.poisson(0.5)
    assert lambda_T(arrivals, -0.3) == pytest.approx(math.log(0.5 / 0.8))
    assert math.isinf(lambda_T(arrivals, 0.5))


def test_entry_threshold_and_log_mgf(tandem_identical):
    model, _ = tandem_identical
    doubled = model.b[1]
    assert entry_threshold(model, doubled) == pytest.approx(0.5)
    assert entry_log_mgf(model, doubled, 0.2) == pytest.approx(exp_lambda(1.0, 0.4))
    assert math.isinf(entry_log_mgf(model, doubled, 0.6))


def test_log_mgf_has_no_closed_form_for_coupled_entries(resequencing):
    model, _ = resequencing
    assert entry_log_mgf(model, model.b[3], 0.1) is None
    assert entry_log_mgf(model, poly((2, 3)), 0.1) is None
    assert entry_log_mgf(model, model.a[3][3], 0.1) == 0.0


def test_block_lambda_of_coin_gated_station(resequencing):
    model, _ = resequencing
    structure = analyze_structure(model)
    value = lambda_block_analytic(model, structure, 1, 0.3)
    expected = math.log(0.7 * 1.2 / (1.2 - 0.3) + 0.3)
    assert value == pytest.approx(expected)


def test_analytic_lambda_S_is_max_over_classes(tandem_independent):
    model, _ = tandem_independent
    lam = analytic_lambda_S(model, analyze_structure(model), eta=1.0)
    assert lam(0.4) == pytest.approx(max(exp_lambda(1.0, 0.4), exp_lambda(1.5, 0.4)))
    assert math.isinf(lam(1.0))


def test_default_theta_grid():
    grid = default_theta_grid(1.0, points=5)
    assert grid[0] == 0.0 and grid[-1] == pytest.approx(0.95)
    assert default_theta_grid(1.0, theta_max=0.5, points=3).tolist() == [0.0, 0.25, 0.5]
    assert default_theta_grid(math.inf, theta_max=2.0, points=3)[-1] == 2.0
    with pytest.raises(ValueError):
        default_theta_grid(math.inf)


def test_constant_samples_give_exact_curve():
    curve = curve_from_samples(np.full(100, 3.0), [0.0, 0.5, 1.0], n=2, label="c")
    assert curve.values == pytest.approx([0.0, 0.75, 1.5])
    assert curve.half_widths == pytest.approx([0.0, 0.0, 0.0])
    assert not curve.infinite.any()


def test_dominant_sample_is_flagged_infinite():
    samples = np.zeros(100)
    samples[0] = 1000.0
    curve = curve_from_samples(samples, [0.0, 0.5, 1.0], n=1, label="heavy")
    assert curve.infinite.tolist() == [False, True, True]
    assert curve.finite_end == 0.0
    assert math.isinf(curve.evaluate(0.5))
    rows = curve.rows()
    assert rows[1][1:] == ("inf", "", "INFINITE")


def test_block_curve_matches_exponential_station(mm1):
    model, _ = mm1
    structure = analyze_structure(model)
    grid = [0.0, 0.2, 0.4]
    curve = lambda_block_empirical(model, structure, 0, grid, 4, 20_000, Streams(2), block_size=5_000)
    for theta, value, width in zip(grid, curve.values, curve.half_widths):
        assert value == pytest.approx(exp_lambda(1.0, theta), abs=4 * width + 1e-3)
    assert curve.label == "1"


def test_lambda_S_curve_with_single_epoch(mm1):
    model, _ = mm1
    grid = [0.0, 0.3]
    curve = lambda_S_empirical(model, grid, 1, 20_000, Streams(4), block_size=5_000)
    assert curve.upper_bound
    assert curve.values[0] == pytest.approx(0.0, abs=1e-12)
    assert curve.values[1] == pytest.approx(exp_lambda(1.0, 0.3), abs=4 * curve.half_widths[1] + 1e-3)


def test_curves_do_not_depend_on_thread_count(fork_join):
    model, _ = fork_join
    grid = [0.0, 0.1, 0.2]
    one = lambda_S_empirical(model, grid, 4, 900, Streams(9), threads=1, block_size=300)
    many = lambda_S_empirical(model, grid, 4, 900, Streams(9), threads=4, block_size=300)
    assert np.array_equal(one.values, many.values)


def se(curve):
    return np.asarray(curve.half_widths) / Z_95


def swapping_block():
    # A[i][j] = sigma^(j+1): entry (i, j) of a product never depends on i
    return NetworkModel(
        s=2,
        components=(ComponentSpec(1, Exponential(1.0)), ComponentSpec(2, Exponential(1.0))),
        a=((single(1), single(2)), (single(1), single(2))),
        b=(single(1), single(2)),
        arrivals=ArrivalSpec.poisson(0.5),
        name="swapping_block",
    )


def max_of_two_exp_lambda(theta):
    return math.log(2.0 / ((2.0 - theta) * (1.0 - theta)))


def test_block_estimate_does_not_depend_on_the_pair():
    model = swapping_block()
    structure = analyze_structure(model)
    assert structure.classes == ((0, 1),)
    grid = [0.05, 0.15, 0.25]
    n = 16
    curves = {
        pair: lambda_block_empirical(
            model, structure, 0, grid, n, 20_000, Streams(6), pair=pair, block_size=5_000
        )
        for pair in [(0, 0), (0, 1), (1, 0), (1, 1)]
    }
    reference = curves[(0, 0)]
    for pair, curve in curves.items():
        joint = np.hypot(reference.half_widths, curve.half_widths)
        assert np.all(np.abs(curve.values - reference.values) <= joint + 1e-12), pair
        for k, theta in enumerate(grid):
            expected = (exp_lambda(1.0, theta) + (n - 1) * max_of_two_exp_lambda(theta)) / n
            assert curve.values[k] == pytest.approx(expected, abs=2 * curve.half_widths[k] + 1e-3)


def test_estimated_curves_are_convex(fork_join):
    model, _ = fork_join
    structure = analyze_structure(model)
    grid = np.linspace(0.0, 0.36, 13)
    curves = [lambda_S_empirical(model, grid, 8, 20_000, Streams(3), block_size=5_000)]
    curves += [
        lambda_block_empirical(model, structure, ell, grid, 8, 20_000, Streams(3), block_size=5_000)
        for ell in range(structure.d)
    ]
    for curve in curves:
        values, errors = np.asarray(curve.values), se(curve)
        for k in range(1, grid.size - 1):
            midpoint = values[k]
            chord = (values[k - 1] + values[k + 1]) / 2.0
            joint = math.sqrt(errors[k - 1] ** 2 + errors[k] ** 2 + errors[k + 1] ** 2)
            assert midpoint <= chord + 3 * joint + 1e-12, (curve.label, k)


def test_lambda_S_is_subadditive_in_n(fork_join):
    model, _ = fork_join
    grid = [0.05, 0.1]
    curves = {
        n: lambda_S_empirical(model, grid, n, 20_000, Streams(8), block_size=5_000)
        for n in (8, 16, 32, 64)
    }
    for k in (8, 16, 32):
        short, long = curves[k], curves[2 * k]
        joint = np.hypot(se(short), se(long))
        assert np.all(long.values <= short.values + 3 * joint), k


def test_lambda_S_approaches_the_largest_block_from_above(fork_join):
    model, _ = fork_join
    structure = analyze_structure(model)

    def excess(grid, n):
        s_curve = lambda_S_empirical(model, grid, n, 20_000, Streams(5), block_size=5_000)
        blocks = [
            lambda_block_empirical(
                model, structure, ell, grid, n, 20_000, Streams(5), block_size=5_000
            )
            for ell in range(structure.d)
        ]
        values = np.array([curve.values for curve in blocks])
        top = values.argmax(axis=0)
        top_se = np.array([se(blocks[ell])[k] for k, ell in enumerate(top)])
        return s_curve.values - values.max(axis=0), np.hypot(se(s_curve), top_se)

    # theta < eta / 2 keeps the estimators at finite variance
    wide = np.linspace(0.0, 0.32, 9)
    gap, error = excess(wide, 8)
    assert np.all(gap >= -3 * error - 1e-12)

    narrow = [0.05, 0.1, 0.2]
    gap_short, error_short = excess(narrow, 8)
    gap_long, error_long = excess(narrow, 32)
    assert np.all(gap_long >= -3 * error_long - 1e-12)
    assert np.all(gap_long <= gap_short + 3 * np.hypot(error_short, error_long))


def test_right_derivative_at_zero_is_the_block_gamma(fork_join):
    model, _ = fork_join
    structure = analyze_structure(model)
    h, n = 0.005, 16
    curve = lambda_block_empirical(
        model, structure, 1, [0.0, h], n, 20_000, Streams(12), block_size=5_000
    )
    slope = (curve.values[1] - curve.values[0]) / h
    slope_se = se(curve)[1] / h
    gamma = estimate_gamma(
        model, n, 20_000, Streams(12), block=structure.classes[1], block_size=5_000
    )
    assert gamma.gamma == pytest.approx(1.25, abs=4 * gamma.standard_error)
    assert abs(slope - gamma.gamma) <= 3 * (slope_se + gamma.standard_error) + h
