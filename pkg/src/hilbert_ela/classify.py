"""Function-group prediction from information content features.

A feature dataset is a ``pandas.DataFrame`` with one row per (function,
instance, sample) and at least the feature columns, ``group`` and ``instance``.
"""

from __future__ import annotations

import enum
import logging
import typing as t
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.inspection import permutation_importance as sklearn_permutation_importance
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import StandardScaler

from .errors import DomainError
from .features import FEATURE_NAMES

logger = logging.getLogger(__name__)

DEFAULT_K = 5


class SplitMode(str, enum.Enum):
    """How a feature dataset is divided into training and test records."""

    INSTANCES = "instances"
    RANDOM = "random"


@dataclass(frozen=True)
class FeatureRecord:
    features: dict[str, float]
    label: int
    meta: dict[str, t.Any] = field(default_factory=dict[str, t.Any])

    def as_row(self) -> dict[str, t.Any]:
        return {**self.meta, **self.features, "group": self.label}


def records_frame(records: t.Iterable[FeatureRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.as_row() for record in records])


class KnnGroupClassifier(ClassifierMixin, BaseEstimator):
    """k-nearest-neighbour majority vote in z-scored feature space.

    Standardisation uses training statistics only. Vote ties go to the label
    with the smallest summed neighbour distance, then to the lowest label.
    """

    def __init__(self, k: int = DEFAULT_K) -> None:
        self.k = k

    def fit(self, X: npt.ArrayLike, y: npt.ArrayLike) -> KnnGroupClassifier:
        features = np.asarray(X, dtype=np.float64)
        labels = np.asarray(y).astype(np.int64)
        if features.ndim != 2 or features.shape[0] == 0:
            raise DomainError("training set is empty")
        if not np.all(np.isfinite(features)):
            raise DomainError("training features must be finite")
        if not 1 <= self.k <= features.shape[0]:
            raise DomainError(f"k must lie in [1, {features.shape[0]}], got {self.k}")
        self.scaler_ = StandardScaler().fit(features)
        self.train_ = self.scaler_.transform(features)
        self.labels_ = labels
        self.classes_ = np.unique(labels)
        return self

    def predict(self, X: npt.ArrayLike) -> npt.NDArray[np.int64]:
        queries = self.scaler_.transform(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        distances = cdist(queries, self.train_)
        nearest = np.argsort(distances, axis=1, kind="stable")[:, : self.k]
        return np.array(
            [
                _vote(self.labels_[row], distances[q, row])
                for q, row in enumerate(nearest)
            ],
            dtype=np.int64,
        )


def _vote(labels: npt.NDArray[np.int64], distances: npt.NDArray[np.float64]) -> int:
    candidates, counts = np.unique(labels, return_counts=True)
    tied = candidates[counts == counts.max()]
    if tied.size == 1:
        return int(tied[0])
    summed = np.array([distances[labels == label].sum() for label in tied])
    # np.unique sorts labels, so argmin picks the lowest label among equal sums
    return int(tied[int(np.argmin(summed))])


def _xy(frame: pd.DataFrame, features: t.Sequence[str]) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.int64]]:
    return frame[list(features)].to_numpy(dtype=np.float64), frame["group"].to_numpy(dtype=np.int64)


def knn_predict(
    train: pd.DataFrame,
    query: npt.ArrayLike,
    k: int = DEFAULT_K,
    features: t.Sequence[str] = FEATURE_NAMES,
) -> int:
    X, y = _xy(train, features)
    if k > len(train):
        raise DomainError(f"k={k} exceeds the {len(train)} training records")
    return int(KnnGroupClassifier(k).fit(X, y).predict(query)[0])


def holdout_split(
    frame: pd.DataFrame, test_instances: t.Iterable[int]
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Send every record of the given instances to the test set, the rest to training."""
    held_out = set(test_instances)
    missing = held_out - set(frame["instance"].unique())
    if missing:
        raise DomainError(f"instances not present in the dataset: {sorted(missing)}")
    in_test = frame["instance"].isin(held_out)
    train, test = frame[~in_test], frame[in_test]
    if train.empty or test.empty:
        raise DomainError("holdout split leaves the training or the test set empty")
    return train, test


def random_split(
    frame: pd.DataFrame, test_fraction: float = 1 / 3, seed: int = 0
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Stratified random split by group."""
    try:
        train, test = train_test_split(
            frame, test_size=test_fraction, stratify=frame["group"], random_state=seed
        )
    except ValueError as exc:
        raise DomainError(f"cannot split {len(frame)} records by group: {exc}") from exc
    return t.cast(pd.DataFrame, train), t.cast(pd.DataFrame, test)


def accuracy(
    train: pd.DataFrame,
    test: pd.DataFrame,
    k: int = DEFAULT_K,
    features: t.Sequence[str] = FEATURE_NAMES,
) -> float:
    X_train, y_train = _xy(train, features)
    X_test, y_test = _xy(test, features)
    return float(KnnGroupClassifier(k).fit(X_train, y_train).score(X_test, y_test))


@dataclass(frozen=True, eq=False)
class ImportanceResult:
    base_accuracy: float
    table: pd.DataFrame


def permutation_importance(
    train: pd.DataFrame,
    test: pd.DataFrame,
    k: int = DEFAULT_K,
    repetitions: int = 10,
    seed: int = 0,
    features: t.Sequence[str] = FEATURE_NAMES,
) -> ImportanceResult:
    """Accuracy change (permuted minus base) when one test feature column is shuffled."""
    if repetitions < 1:
        raise DomainError(f"repetitions must be positive, got {repetitions}")
    X_train, y_train = _xy(train, features)
    X_test, y_test = _xy(test, features)
    model = KnnGroupClassifier(k).fit(X_train, y_train)
    base = float(model.score(X_test, y_test))
    result = sklearn_permutation_importance(
        model, X_test, y_test, n_repeats=repetitions, random_state=seed
    )
    # scikit-learn reports base minus permuted
    drops = 0.0 - np.asarray(result["importances"], dtype=np.float64)
    table = pd.DataFrame(
        {
            "feature": list(features),
            "mean_drop": drops.mean(axis=1),
            "std_drop": drops.std(axis=1),
        }
    )
    logger.info("base accuracy %.4f over %d test records", base, len(test))
    return ImportanceResult(base, table)
