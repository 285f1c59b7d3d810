"""Scaled cumulant generating functions: analytic forms and Monte Carlo curves."""

import math
from collections import Counter
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from src.maxplus_tails.core.recursion import block_product_batch, final_S_batch
from src.maxplus_tails.models.network import ArrivalSpec, EntryExpression, EntryKind, NetworkModel
from src.maxplus_tails.models.reports import MGFCurve, StructureReport
from src.maxplus_tails.utils.logging import setup_logger
from src.maxplus_tails.utils.pool import DEFAULT_BLOCK_SIZE, concat_blocks
from src.maxplus_tails.utils.streams import PURPOSE_PATHS, Streams

logger = setup_logger("maxplus-tails.mgf")

Z_95 = 1.959963984540054
HEAVY_MASS_SHARE = 0.9
DEFAULT_GRID_POINTS = 32
DEFAULT_N = 64
DEFAULT_REPLICAS = 100_000


def lambda_T(arrivals: ArrivalSpec, theta: float) -> float:
    """log E[exp(theta tau_1)]; ``math.inf`` where it diverges."""
    return arrivals.log_mgf(theta)


def _coins_shared(model: NetworkModel, ids: Sequence[int]) -> bool:
    coins = [
        model.components[k - 1].coin.id
        for k in ids
        if model.components[k - 1].coin is not None
    ]
    return len(coins) != len(set(coins))


def entry_threshold(model: NetworkModel, entry: EntryExpression) -> float:
    """
    sup{theta : E[exp(theta * entry)] < inf}.

    A component counted m times in a term contributes threshold / m; a max of
    terms is finite exactly when every term is.
    """
    if entry.kind is not EntryKind.POLY:
        return math.inf
    limit = math.inf
    for term in entry.terms:
        for k, multiplicity in Counter(term).items():
            threshold = model.components[k - 1].distribution.mgf_threshold
            limit = min(limit, threshold / multiplicity)
    return limit


def entry_log_mgf(model: NetworkModel, entry: EntryExpression, theta: float) -> Optional[float]:
    """
    Closed-form log E[exp(theta * entry)] for single-term entries.

    Returns None when no closed form applies (several terms, or components tied
    by a shared coin).
    """
    if entry.kind is EntryKind.NEG_INF:
        return None
    if entry.kind is EntryKind.CONST_ZERO:
        return 0.0
    if len(entry.terms) != 1:
        return None
    counts = Counter(entry.terms[0])
    if _coins_shared(model, list(counts)):
        return None
    total = 0.0
    for k, multiplicity in counts.items():
        value = model.components[k - 1].distribution.log_mgf(multiplicity * theta)
        if math.isinf(value):
            return math.inf
        total += value
    return total


def lambda_block_analytic(
    model: NetworkModel, structure: StructureReport, ell: int, theta: float
) -> Optional[float]:
    """
    Closed-form Lambda_ell(theta) for a singleton class, or None when not available.

    For a singleton class the product of diagonal entries is a sum of i.i.d.
    copies, so Lambda_ell is the log-MGF of the diagonal entry.
    """
    coords = structure.classes[ell]
    if len(coords) != 1:
        return None
    c = coords[0]
    return entry_log_mgf(model, model.a[c][c], theta)


def block_is_analytic(model: NetworkModel, structure: StructureReport, ell: int) -> bool:
    return lambda_block_analytic(model, structure, ell, 0.0) is not None


def block_theta_limit(model: NetworkModel, coords: Sequence[int]) -> float:
    """Largest theta below which every entry of the block has a finite MGF."""
    return min(
        (entry_threshold(model, model.a[i][j]) for i in coords for j in coords),
        default=math.inf,
    )


def analytic_lambda_S(
    model: NetworkModel, structure: StructureReport, eta: float
) -> Optional[Callable[[float], float]]:
    """
    Lambda_S(theta) = max_ell Lambda_ell(theta) on [0, eta), +inf beyond.

    Returns None unless every class has a closed form.
    """
    if not all(block_is_analytic(model, structure, ell) for ell in range(structure.d)):
        return None

    def lambda_S(theta: float) -> float:
        if theta >= eta:
            return math.inf
        return max(
            lambda_block_analytic(model, structure, ell, theta) for ell in range(structure.d)
        )

    return lambda_S


def default_theta_grid(
    limit: float, theta_max: Optional[float] = None, points: int = DEFAULT_GRID_POINTS
) -> np.ndarray:
    """
    ``points`` values from 0 to 0.95 * limit, or to ``theta_max`` when the limit is
    infinite or larger.
    """
    if theta_max is not None and (math.isinf(limit) or theta_max < 0.95 * limit):
        top = theta_max
    elif math.isinf(limit):
        raise ValueError("An infinite theta limit needs an explicit theta_max")
    else:
        top = 0.95 * limit
    if top <= 0:
        raise ValueError(f"theta grid upper end must be positive, got {top}")
    return np.linspace(0.0, top, points)


def curve_from_samples(
    samples: np.ndarray,
    theta_grid: Sequence[float],
    n: int,
    label: str,
    upper_bound: bool = False,
) -> MGFCurve:
    """
    (1/n) log-mean-exp estimates with delta-method 95% half-widths.

    A grid point is flagged INFINITE when one sample carries more than 90% of
    the exponential mass both in the first half of the replicas and in all of them.
    """
    samples = np.asarray(samples, dtype=float)
    replicas = samples.size
    if replicas < 2:
        raise ValueError("curve estimation needs at least two replicas")
    grid = np.asarray(theta_grid, dtype=float)
    values = np.empty(grid.size)
    widths = np.empty(grid.size)
    infinite = np.zeros(grid.size, dtype=bool)
    half = samples[: replicas // 2]

    for index, theta in enumerate(grid):
        exponent = theta * samples
        log_mean = logsumexp(exponent) - math.log(replicas)
        weights = np.exp(exponent - exponent.max())
        mean_weight = weights.mean()
        spread = weights.std(ddof=1)
        values[index] = log_mean / n
        widths[index] = Z_95 * spread / (mean_weight * math.sqrt(replicas)) / n

        share_all = weights.max() / weights.sum()
        half_weights = np.exp(theta * half - (theta * half).max())
        share_half = half_weights.max() / half_weights.sum()
        if share_all > HEAVY_MASS_SHARE and share_half > HEAVY_MASS_SHARE:
            infinite[index] = True

    values[infinite] = np.nan
    widths[infinite] = np.nan
    if infinite.any():
        logger.warning(
            f"Curve {label}: heavy-mass diagnostic flags theta >= {grid[infinite][0]:.4g} as INFINITE"
        )
    return MGFCurve(
        theta_grid=grid,
        values=values,
        half_widths=widths,
        infinite=infinite,
        n_used=n,
        replicas=replicas,
        label=label,
        upper_bound=upper_bound,
    )


def lambda_block_empirical(
    model: NetworkModel,
    structure: StructureReport,
    ell: int,
    theta_grid: Sequence[float],
    n: int,
    replicas: int,
    streams: Streams,
    threads: int = 1,
    pair: Optional[Tuple[int, int]] = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> MGFCurve:
    """
    Monte Carlo Lambda_ell from R independent block products M_[1,n].

    Args:
        model: Network model
        structure: Its structure report
        ell: Class index (0-based)
        theta_grid: Increasing theta values
        n: Block length (number of factors)
        replicas: Number of products
        streams: Stream family
        threads: Worker count
        pair: Positions (i, j) inside the class; default is its smallest coordinate twice
        block_size: Replicas per random stream

    Returns:
        MGFCurve labelled with the class number
    """
    if n < 1 or replicas < 2:
        raise ValueError("block estimation needs n >= 1 and replicas >= 2")
    coords = structure.classes[ell]
    logger.info(
        f"Estimating Lambda_{ell + 1} on coordinates {[c + 1 for c in coords]} "
        f"(n={n}, R={replicas})"
    )

    def job(size: int, rng: np.random.Generator) -> np.ndarray:
        return block_product_batch(model, coords, n, size, rng, pair)

    samples = concat_blocks(
        job, replicas, streams.child(PURPOSE_PATHS).child(ell + 1), threads, block_size
    )
    return curve_from_samples(samples, theta_grid, n, label=str(ell + 1))


def lambda_S_empirical(
    model: NetworkModel,
    theta_grid: Sequence[float],
    n: int,
    replicas: int,
    streams: Streams,
    threads: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> MGFCurve:
    """
    Monte Carlo Lambda_S at block length ``n``.

    Uses S_{n-1}, the dater over n driving epochs, whose log-moment is
    subadditive in n; the finite-n value therefore bounds Lambda_S from above
    up to Monte Carlo error.
    """
    if n < 1 or replicas < 2:
        raise ValueError("Lambda_S estimation needs n >= 1 and replicas >= 2")
    logger.info(f"Estimating Lambda_S for {model.name} (n={n}, R={replicas})")

    def job(size: int, rng: np.random.Generator) -> np.ndarray:
        return final_S_batch(model, n - 1, size, rng)

    samples = concat_blocks(job, replicas, streams.child(PURPOSE_PATHS), threads, block_size)
    return curve_from_samples(samples, theta_grid, n, label="S", upper_bound=True)
