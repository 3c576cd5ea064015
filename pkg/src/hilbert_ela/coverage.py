from __future__ import annotations

import enum
import typing as t
from dataclasses import asdict, dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff
from scipy.stats import rankdata

from .errors import DomainError


class HausdorffVariant(str, enum.Enum):
    """How directed nearest-neighbour distances are reduced to one coverage value."""

    MAX = "max"
    AVERAGED = "averaged"


@dataclass(frozen=True)
class CoverageResult:
    dimension: int
    sample_size: int
    sampler: str
    run: int
    hausdorff: float


def _point_sets(a: npt.ArrayLike, b: npt.ArrayLike) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    u = np.atleast_2d(np.asarray(a, dtype=np.float64))
    v = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if u.shape[0] == 0 or v.shape[0] == 0 or u.size == 0 or v.size == 0:
        raise DomainError("hausdorff distance needs two non-empty point sets")
    if u.shape[1] != v.shape[1]:
        raise DomainError(
            f"point sets have different dimensions: {u.shape[1]} and {v.shape[1]}"
        )
    return u, v


def hausdorff_distance(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Symmetric Hausdorff distance between two point sets (Euclidean norm)."""
    u, v = _point_sets(a, b)
    # directed_hausdorff breaks early on the inner minimum; its result does not depend on the seed
    forward = directed_hausdorff(u, v, seed=0)[0]
    backward = directed_hausdorff(v, u, seed=0)[0]
    return float(max(forward, backward))


def averaged_hausdorff_distance(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Larger of the two mean nearest-neighbour distances between the point sets."""
    u, v = _point_sets(a, b)
    forward = cKDTree(v).query(u)[0].mean()
    backward = cKDTree(u).query(v)[0].mean()
    return float(max(forward, backward))


def coverage_distance(
    sample: npt.ArrayLike, reference: npt.ArrayLike, variant: HausdorffVariant = HausdorffVariant.AVERAGED
) -> float:
    if variant is HausdorffVariant.MAX:
        return hausdorff_distance(sample, reference)
    return averaged_hausdorff_distance(sample, reference)


def friedman_mean_ranks(results: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Mean rank of every column (strategy) over rows (blocks); rank 1 is the smallest value."""
    matrix = np.asarray(results, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 2:
        raise DomainError(
            f"ranking needs at least 1 block and 2 strategies, got shape {matrix.shape}"
        )
    if np.isnan(matrix).any():
        raise DomainError("ranking matrix has missing cells")
    return rankdata(matrix, method="average", axis=1).mean(axis=0)


def results_frame(results: t.Iterable[CoverageResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [asdict(result) for result in results],
        columns=["dimension", "sample_size", "sampler", "run", "hausdorff"],
    )


def summarise_coverage(results: t.Iterable[CoverageResult]) -> pd.DataFrame:
    """Mean and standard deviation of the Hausdorff distance per sampler and (d, n)."""
    frame = results_frame(results)
    summary = (
        frame.groupby(["dimension", "sample_size", "sampler"], sort=True)["hausdorff"]
        .agg(["mean", "std"])
        .reset_index()
    )
    return summary


def coverage_ranks(results: t.Iterable[CoverageResult]) -> pd.DataFrame:
    """Friedman mean ranks of the samplers, blocks being the (d, n, run) cells that ran."""
    frame = results_frame(results)
    # Only observed blocks become rows; a sampler missing from one of them stays NaN
    table = frame.pivot(
        index=["dimension", "sample_size", "run"], columns="sampler", values="hausdorff"
    )
    ranks = friedman_mean_ranks(table.to_numpy())
    return pd.DataFrame({"sampler": list(table.columns), "mean_rank": ranks})
