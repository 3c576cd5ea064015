from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import stats

from .errors import ContractError, DomainError
from .hilbert import CurveParams, hilbert_argsort, min_order_for_sample
from .sampling import FloatArray, OrderedSample, SearchSpace

logger = logging.getLogger(__name__)


class OrderingStrategy(str, enum.Enum):
    HILBERT = "hilbert"
    NEAREST_NEIGHBOUR = "nn"
    RANDOM = "random"


@dataclass(frozen=True)
class StepSizeSummary:
    mean: float
    std: float
    max: float
    skewness: float
    kurtosis: float


def quantise(
    sample: OrderedSample, space: SearchSpace, order: int
) -> npt.NDArray[np.int64]:
    """Bin every point into one of ``2**order`` cells per axis (upper bound clamps into the last cell)."""
    if sample.dimension != space.dimension:
        raise DomainError(
            f"sample has {sample.dimension} dimensions, search space has {space.dimension}"
        )
    if not space.contains(sample.points):
        raise DomainError("sample has points outside the search space")
    side = 1 << order
    unit = (sample.points - space.lower) / space.width
    cells = np.floor(unit * side).astype(np.int64)
    return np.clip(cells, 0, side - 1)


def hilbert_permutation(sample: OrderedSample, space: SearchSpace) -> npt.NDArray[np.intp]:
    """Positions of the sample sorted by the Hilbert index of their grid cell, with ``p = ceil(log2(n + 1))``.

    Points sharing a cell keep their input order.
    """
    if len(sample) == 0:
        raise DomainError("cannot order an empty sample")
    p = min_order_for_sample(len(sample))
    logger.debug("ordering %d points along a curve of order %d", len(sample), p)
    grid = quantise(sample, space, p)
    return np.asarray(hilbert_argsort(CurveParams(space.dimension, p), grid), dtype=np.intp)


def nearest_neighbour_permutation(
    sample: OrderedSample,
    start: int | None = 0,
    rng: np.random.Generator | None = None,
) -> npt.NDArray[np.intp]:
    """Greedy chain: repeatedly visit the closest unvisited point.

    Starts at index ``start`` of the input, or at a random point when ``start``
    is None. Distance ties go to the lowest original position.
    """
    n = len(sample)
    if n == 0:
        raise DomainError("cannot order an empty sample")
    if start is None:
        if rng is None:
            raise DomainError("a random start needs a random generator")
        start = int(rng.integers(n))
    if not 0 <= start < n:
        raise DomainError(f"start index {start} out of range for {n} points")
    points = sample.points
    # kept sorted so argmin resolves ties to the lowest original position
    remaining = np.delete(np.arange(n), start)
    chain = np.empty(n, dtype=np.intp)
    chain[0] = current = start
    for position in range(1, n):
        diff = points[remaining] - points[current]
        k = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
        chain[position] = current = int(remaining[k])
        remaining = np.delete(remaining, k)
    return chain


def random_permutation(sample: OrderedSample, rng: np.random.Generator) -> npt.NDArray[np.intp]:
    if len(sample) == 0:
        raise DomainError("cannot order an empty sample")
    return rng.permutation(len(sample)).astype(np.intp)


def ordering_permutation(
    sample: OrderedSample,
    strategy: OrderingStrategy,
    space: SearchSpace,
    rng: np.random.Generator,
) -> npt.NDArray[np.intp]:
    """Positions of ``sample`` in the order ``strategy`` visits them."""
    if strategy is OrderingStrategy.HILBERT:
        return hilbert_permutation(sample, space)
    if strategy is OrderingStrategy.NEAREST_NEIGHBOUR:
        return nearest_neighbour_permutation(sample)
    return random_permutation(sample, rng)


def order_hilbert(sample: OrderedSample, space: SearchSpace) -> OrderedSample:
    return sample.take(hilbert_permutation(sample, space))


def order_nearest_neighbour(
    sample: OrderedSample,
    start: int | None = 0,
    rng: np.random.Generator | None = None,
) -> OrderedSample:
    return sample.take(nearest_neighbour_permutation(sample, start, rng))


def order_random(sample: OrderedSample, rng: np.random.Generator) -> OrderedSample:
    return sample.take(random_permutation(sample, rng))


def apply_ordering(
    sample: OrderedSample,
    strategy: OrderingStrategy | None,
    space: SearchSpace,
    rng: np.random.Generator,
) -> OrderedSample:
    """Order a sample with ``strategy``; ``None`` keeps a pre-ordered sample as is."""
    if strategy is None:
        if not sample.ordered:
            raise ContractError("keeping the input order needs an ordered sample")
        return sample
    return sample.take(ordering_permutation(sample, strategy, space, rng))


def step_sizes(sample: OrderedSample) -> FloatArray:
    """Euclidean distances between consecutive points."""
    if len(sample) < 2:
        raise DomainError(f"step sizes need at least 2 points, got {len(sample)}")
    return np.linalg.norm(np.diff(sample.points, axis=0), axis=1)


def chain_length(sample: OrderedSample) -> float:
    return float(step_sizes(sample).sum())


def step_size_summary(steps: FloatArray) -> StepSizeSummary:
    steps = np.asarray(steps, dtype=np.float64)
    if steps.size == 0:
        raise DomainError("no step sizes to summarise")
    spread = float(steps.std())
    # moments are undefined for a constant step size
    skewness = float(stats.skew(steps)) if spread > 0 else 0.0
    kurtosis = float(stats.kurtosis(steps)) if spread > 0 else 0.0
    return StepSizeSummary(
        mean=float(steps.mean()),
        std=spread,
        max=float(steps.max()),
        skewness=skewness,
        kurtosis=kurtosis,
    )
