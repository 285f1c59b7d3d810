"""Simulation of the (max,plus) recursion, S_n, the maximal dater Z and gamma."""

import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.maxplus_tails.core.semiring import max_entry, oplus, otimes, product_range, scale
from src.maxplus_tails.errors import InstabilityError
from src.maxplus_tails.models.maxplus import (
    BOTTOM,
    MaxPlusMatrix,
    MaxPlusValue,
    coerce_value,
    oplus_value,
)
from src.maxplus_tails.models.network import NetworkModel, RealizedBatch
from src.maxplus_tails.models.reports import (
    DaterBatch,
    DaterSample,
    GammaEstimate,
    PathSample,
)
from src.maxplus_tails.utils.logging import setup_logger
from src.maxplus_tails.utils.pool import DEFAULT_BLOCK_SIZE, concat_blocks, map_blocks
from src.maxplus_tails.utils.streams import PURPOSE_DATERS, PURPOSE_GAMMA, Streams

logger = setup_logger("maxplus-tails.recursion")

DEFAULT_N_MIN = 64
DEFAULT_MAX_HORIZON = 1_000_000
DRIFT_WINDOW = 10_000
MARGIN_SCALE = 30.0

State = Union[MaxPlusMatrix, Sequence[MaxPlusValue]]


def _as_column(state: State, size: int) -> MaxPlusMatrix:
    if isinstance(state, MaxPlusMatrix):
        column = state
    else:
        column = MaxPlusMatrix(len(state), 1, tuple(coerce_value(v) for v in state))
    if column.shape != (size, 1):
        raise ValueError(f"State must have {size} coordinates, got shape {column.shape}")
    return column


def advance(a: MaxPlusMatrix, b: MaxPlusMatrix, state: State, t_next: float) -> MaxPlusMatrix:
    """X_{n+1} = A ⊗ X_n ⊕ B ⊗ T_{n+1} on given realized matrices."""
    column = _as_column(state, a.rows)
    return oplus(otimes(a, column), scale(b, float(t_next)))


def step(
    model: NetworkModel, state: State, t_next: float, rng: np.random.Generator
) -> MaxPlusMatrix:
    """One recursion step with a fresh draw of (A, B)."""
    a, b = model.sample_step(rng)
    return advance(a, b, state, t_next)


def forward_daters(
    model: NetworkModel, n: int, rng: np.random.Generator, start_time: float = 0.0
) -> np.ndarray:
    """
    Run the forward recursion from the empty state for ``n`` customers.

    Returns:
        Array of ⊕_i X_k^(i) - T_k for k = 1..n
    """
    state = MaxPlusMatrix.bottom(model.s, 1)
    t = float(start_time)
    out = np.empty(n)
    for k in range(n):
        if k:
            t += float(model.arrivals.sample(rng, 1)[0])
        state = step(model, state, t, rng)
        out[k] = max_entry(state) - t
    return out


def _advance_batch(
    realized: RealizedBatch, values: np.ndarray, defined: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """V_{n+1} = A_{n+1} ⊗ V_n ⊕ B_{n+1} for a batch; ``defined`` marks non-BOTTOM coordinates."""
    size, s = values.shape
    out = np.zeros((size, s))
    out_defined = np.zeros(s, dtype=bool)
    for i in range(s):
        candidates = []
        if realized.b[i] is not None:
            candidates.append(realized.b[i])
        for j, entry in realized.a_rows[i]:
            if defined[j]:
                candidates.append(entry + values[:, j])
        if candidates:
            out[:, i] = candidates[0] if len(candidates) == 1 else np.maximum.reduce(candidates)
            out_defined[i] = True
    return out, out_defined


def _initial_batch(realized: RealizedBatch, size: int, s: int) -> Tuple[np.ndarray, np.ndarray]:
    values = np.zeros((size, s))
    defined = np.zeros(s, dtype=bool)
    for i, b in enumerate(realized.b):
        if b is not None:
            values[:, i] = b
            defined[i] = True
    return values, defined


def _top(values: np.ndarray, defined: np.ndarray) -> np.ndarray:
    return values[:, defined].max(axis=1)


def simulate_S_batch(
    model: NetworkModel, n: int, size: int, rng: np.random.Generator
) -> np.ndarray:
    """
    S_0..S_n for ``size`` independent paths via the incremental vector recursion.

    Returns:
        Array of shape (size, n + 1)
    """
    if n < 0:
        raise ValueError(f"horizon must be non-negative, got {n}")
    out = np.empty((size, n + 1))
    realized = model.evaluate_batch(model.sample_components(rng, size))
    values, defined = _initial_batch(realized, size, model.s)
    out[:, 0] = _top(values, defined)
    for k in range(1, n + 1):
        realized = model.evaluate_batch(model.sample_components(rng, size))
        values, defined = _advance_batch(realized, values, defined)
        out[:, k] = _top(values, defined)
    return out


def final_S_batch(model: NetworkModel, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """S_n only, for ``size`` independent paths."""
    realized = model.evaluate_batch(model.sample_components(rng, size))
    values, defined = _initial_batch(realized, size, model.s)
    for _ in range(n):
        realized = model.evaluate_batch(model.sample_components(rng, size))
        values, defined = _advance_batch(realized, values, defined)
    return _top(values, defined)


def block_product_batch(
    model: NetworkModel,
    coords: Sequence[int],
    n: int,
    size: int,
    rng: np.random.Generator,
    pair: Optional[Tuple[int, int]] = None,
) -> np.ndarray:
    """
    Entry (i, j) of M_[1,n] = A_n ⊗ ... ⊗ A_1 restricted to the block ``coords``.

    Args:
        model: Network model
        coords: Coordinates of the block (0-based, original numbering)
        n: Number of factors
        size: Number of independent products
        rng: Generator
        pair: Positions (i, j) inside ``coords``; defaults to the smallest coordinate twice

    Returns:
        Array of shape (size,); -inf where the entry stays BOTTOM
    """
    coords = list(coords)
    i, j = pair if pair is not None else (0, 0)
    local = {c: position for position, c in enumerate(coords)}
    values = np.zeros((size, len(coords)))
    defined = np.zeros(len(coords), dtype=bool)
    defined[j] = True
    for _ in range(n):
        realized = model.evaluate_batch(model.sample_components(rng, size))
        block = RealizedBatch(
            a_rows=[
                [(local[col], entry) for col, entry in realized.a_rows[row] if col in local]
                for row in coords
            ],
            b=[None] * len(coords),
        )
        values, defined = _advance_batch(block, values, defined)
    if not defined[i]:
        return np.full(size, -math.inf)
    return values[:, i]


def simulate_S(model: NetworkModel, n: int, rng: np.random.Generator) -> PathSample:
    """
    One time-reversed path with S_0..S_n.

    Args:
        model: Network model
        n: Horizon
        rng: Generator

    Returns:
        PathSample holding the component draws, interarrivals and S values
    """
    if n < 0:
        raise ValueError(f"horizon must be non-negative, got {n}")
    sigma = model.sample_components(rng, n + 1)
    tau = model.arrivals.sample(rng, n)
    # evaluate every epoch at once, then walk the recursion along time
    realized = model.evaluate_batch(sigma)
    s_values = np.empty(n + 1)
    values = np.zeros((1, model.s))
    defined = np.zeros(model.s, dtype=bool)
    for k in range(n + 1):
        epoch = RealizedBatch(
            a_rows=[[(j, entry[k : k + 1]) for j, entry in row] for row in realized.a_rows],
            b=[None if b is None else b[k : k + 1] for b in realized.b],
        )
        if k == 0:
            values, defined = _initial_batch(epoch, 1, model.s)
        else:
            values, defined = _advance_batch(epoch, values, defined)
        s_values[k] = _top(values, defined)[0]
    return PathSample(horizon=n, sigma=sigma, tau=tau, s_values=s_values)


def segment_S(
    model: NetworkModel,
    path: PathSample,
    u: int,
    v: int,
    matrices: Optional[List[Tuple[MaxPlusMatrix, MaxPlusMatrix]]] = None,
) -> MaxPlusValue:
    """
    S_[u,v] = ⊕_i ⊕_{u<=k<=v} (D_[k+1,v] ⊗ B_k)^(i) by direct evaluation.

    Slow; meant as an oracle for the incremental recursion.
    """
    if matrices is None:
        matrices = path.matrices(model)
    a_list = [a for a, _ in matrices]
    total: MaxPlusValue = BOTTOM
    for k in range(u, v + 1):
        product = product_range(a_list, k + 1, v)
        contribution = max_entry(otimes(product, matrices[k][1]))
        total = oplus_value(total, contribution)
    return total


def estimate_gamma(
    model: NetworkModel,
    n: int,
    replicas: int,
    streams: Streams,
    threads: int = 1,
    block: Optional[Sequence[int]] = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> GammaEstimate:
    """
    Estimate the Lyapunov exponent from S_n / n over independent paths.

    Args:
        model: Network model
        n: Horizon
        replicas: Number of paths
        streams: Stream family
        threads: Worker count
        block: Restrict to the diagonal block on these coordinates
        block_size: Replicas per random stream

    Returns:
        GammaEstimate with mean, standard error and stability verdict
    """
    if n < 1 or replicas < 1:
        raise ValueError("estimate_gamma needs n >= 1 and replicas >= 1")

    def job(size: int, rng: np.random.Generator) -> np.ndarray:
        if block is None:
            return final_S_batch(model, n, size, rng) / n
        return block_product_batch(model, block, n, size, rng) / n

    ratios = concat_blocks(job, replicas, streams.child(PURPOSE_GAMMA), threads, block_size)
    gamma = float(ratios.mean())
    se = float(ratios.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    estimate = GammaEstimate(
        gamma=gamma,
        standard_error=se,
        mean_interarrival=model.arrivals.mean,
        horizon=n,
        replicas=replicas,
    )
    logger.info(
        f"gamma_hat={gamma:.6g} (s.e. {se:.3g}) vs a={model.arrivals.mean:.6g} "
        f"for {model.name}: {'stable' if estimate.stable else 'unstable'}"
    )
    return estimate


def default_margin(gamma: float, mean_interarrival: float) -> float:
    gap = mean_interarrival - gamma
    if gap <= 0:
        raise InstabilityError(
            f"gamma_hat={gamma:.6g} is not below the mean interarrival {mean_interarrival:.6g}"
        )
    return MARGIN_SCALE * max(1.0, 1.0 / gap)


def _dater_block(
    model: NetworkModel,
    size: int,
    rng: np.random.Generator,
    margin: float,
    n_min: int,
    max_horizon: int,
    drift_window: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    z = np.empty(size)
    horizon_used = np.empty(size, dtype=np.int64)
    converged = np.zeros(size, dtype=bool)

    realized = model.evaluate_batch(model.sample_components(rng, size))
    values, defined = _initial_batch(realized, size, model.s)
    running_max = _top(values, defined)
    offset = np.zeros(size)
    active = np.arange(size)
    checkpoint: Optional[np.ndarray] = None

    for n in range(1, max_horizon + 1):
        count = active.size
        realized = model.evaluate_batch(model.sample_components(rng, count))
        tau = model.arrivals.sample(rng, count)
        values, defined = _advance_batch(realized, values, defined)
        offset += tau
        walk = _top(values, defined) - offset
        np.maximum(running_max, walk, out=running_max)

        if n < n_min:
            continue

        if (n - n_min) % drift_window == 0:
            if checkpoint is not None and float(np.mean(walk - checkpoint)) > 0:
                raise InstabilityError(
                    f"S_n - S^tau_n kept increasing over {drift_window} steps "
                    f"(horizon {n}) for {model.name}: the network is unstable"
                )
            checkpoint = walk.copy()

        done = walk < running_max - margin * (1.0 + math.sqrt(n))
        if done.any():
            finished = active[done]
            z[finished] = running_max[done]
            horizon_used[finished] = n
            converged[finished] = True
            keep = ~done
            active = active[keep]
            values = values[keep]
            running_max = running_max[keep]
            offset = offset[keep]
            if checkpoint is not None:
                checkpoint = checkpoint[keep]
            if active.size == 0:
                break

    if active.size:
        z[active] = running_max
        horizon_used[active] = max_horizon
    return z, horizon_used, converged


def sample_daters(
    model: NetworkModel,
    replicas: int,
    streams: Streams,
    margin: float,
    threads: int = 1,
    n_min: int = DEFAULT_N_MIN,
    max_horizon: int = DEFAULT_MAX_HORIZON,
    drift_window: int = DRIFT_WINDOW,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> DaterBatch:
    """
    Sample ``replicas`` independent maximal daters.

    Each replica runs the backward supremum of S_n - S^tau_n and stops once
    ``n >= n_min`` and the walk sits more than ``margin * (1 + sqrt(n))`` below
    its running maximum, or at ``max_horizon`` (then marked non-converged).

    Raises:
        InstabilityError: If the walk drifts upward over a whole window
    """
    logger.info(
        f"Sampling {replicas} daters for {model.name} (margin={margin:.4g}, "
        f"n_min={n_min}, max_horizon={max_horizon})"
    )

    def job(size: int, rng: np.random.Generator):
        return _dater_block(model, size, rng, margin, n_min, max_horizon, drift_window)

    parts = map_blocks(job, replicas, streams.child(PURPOSE_DATERS), threads, block_size)
    batch = DaterBatch(
        z=np.concatenate([p[0] for p in parts]),
        horizon_used=np.concatenate([p[1] for p in parts]),
        converged=np.concatenate([p[2] for p in parts]),
    )
    if batch.censored:
        logger.warning(f"{batch.censored} of {replicas} daters hit max_horizon={max_horizon}")
    return batch


def sample_Z(
    model: NetworkModel,
    rng: np.random.Generator,
    margin: float,
    max_horizon: int = DEFAULT_MAX_HORIZON,
    n_min: int = DEFAULT_N_MIN,
    drift_window: int = DRIFT_WINDOW,
) -> DaterSample:
    """One maximal dater drawn with the adaptive truncation rule."""
    z, horizon_used, converged = _dater_block(
        model, 1, rng, margin, n_min, max_horizon, drift_window
    )
    return DaterSample(z=float(z[0]), horizon_used=int(horizon_used[0]), converged=bool(converged[0]))
