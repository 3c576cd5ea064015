"""Information content features of an ordered, evaluated sample.

Consecutive points give slopes ``(y[i+1] - y[i]) / |x[i+1] - x[i]|``. For a
threshold ``eps`` every slope becomes a symbol in {-1, 0, +1}; the entropy of
consecutive unequal symbol pairs is ``H(eps)`` and the relative length of the
symbol string once zeros are removed and repeats collapsed is ``M(eps)``.
Sweeping ``eps`` over a grid yields the five features.
"""

from __future__ import annotations

import logging
import math
import typing as t
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import ContractError, DomainError
from .sampling import FloatArray, OrderedSample

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("eps_s", "eps_max", "eps_ratio", "h_max", "m0")

SymbolArray: t.TypeAlias = npt.NDArray[np.int8]

_LOG_6 = math.log(6.0)


def default_epsilons() -> FloatArray:
    return np.concatenate([[0.0], np.logspace(-5, 15, 1000)])


@dataclass(frozen=True, eq=False)
class IcConfig:
    epsilons: FloatArray = field(default_factory=default_epsilons)
    settling_threshold: float = 0.05
    ratio: float = 0.5

    def __post_init__(self) -> None:
        epsilons = np.asarray(self.epsilons, dtype=np.float64).reshape(-1)
        if epsilons.size < 2 or epsilons[0] != 0.0:
            raise DomainError("epsilon grid must start with 0 and hold a positive threshold")
        if np.any(np.diff(epsilons) <= 0):
            raise DomainError("epsilon grid must be strictly increasing")
        if not 0 < self.settling_threshold < 1:
            raise DomainError(
                f"settling threshold must lie in (0, 1), got {self.settling_threshold}"
            )
        if not 0 < self.ratio < 1:
            raise DomainError(f"ratio must lie in (0, 1), got {self.ratio}")
        object.__setattr__(self, "epsilons", epsilons)


@dataclass(frozen=True)
class IcFeatures:
    """The five information content features.

    ``eps_s`` and ``eps_ratio`` are log10 thresholds, ``eps_max`` is a raw
    threshold. ``eps_s_settled`` is False when the entropy never fell below
    the settling threshold on the grid.
    """

    eps_s: float
    eps_max: float
    eps_ratio: float
    h_max: float
    m0: float
    eps_s_settled: bool = True
    skipped_pairs: int = 0

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in FEATURE_NAMES}


@dataclass(frozen=True, eq=False)
class IcCurves:
    """Entropy and partial information for every threshold of the grid."""

    epsilons: FloatArray
    entropy: FloatArray
    partial_information: FloatArray
    skipped_pairs: int


def slopes(sample: OrderedSample) -> tuple[FloatArray, int]:
    """Slopes between consecutive points and the number of pairs that were skipped.

    Coincident consecutive points give slope 0 when their fitness is equal;
    otherwise the pair has no defined slope and is skipped.
    """
    if sample.fitness is None:
        raise ContractError("sample has no fitness values")
    if len(sample) < 2:
        raise DomainError(f"slopes need at least 2 points, got {len(sample)}")
    dx = np.linalg.norm(np.diff(sample.points, axis=0), axis=1)
    dy = np.diff(sample.fitness)
    coincident = dx == 0
    undefined = coincident & (dy != 0)
    psi = np.zeros_like(dy)
    np.divide(dy, dx, out=psi, where=~coincident)
    return psi[~undefined], int(undefined.sum())


def symbols_from_slopes(psi: FloatArray, epsilon: float) -> SymbolArray:
    symbols = np.zeros(psi.shape, dtype=np.int8)
    symbols[psi > epsilon] = 1
    symbols[psi < -epsilon] = -1
    return symbols


def symbol_sequence(sample: OrderedSample, epsilon: float) -> SymbolArray:
    psi, skipped = slopes(sample)
    if skipped:
        logger.warning("skipped %d coincident point pairs with different fitness", skipped)
    return symbols_from_slopes(psi, epsilon)


def entropy_h(symbols: npt.ArrayLike) -> float:
    """Base-6 entropy of consecutive unequal symbol pairs."""
    s = np.asarray(symbols, dtype=np.int64)
    if s.size < 2:
        raise DomainError(f"entropy needs at least 2 symbols, got {s.size}")
    first, second = s[:-1], s[1:]
    unequal = first != second
    codes = 3 * (first[unequal] + 1) + (second[unequal] + 1)
    counts = np.bincount(codes, minlength=9)
    probs = counts[counts > 0] / (s.size - 1)
    if probs.size == 0:
        return 0.0
    return float(-np.sum(probs * np.log(probs)) / _LOG_6)


def partial_information(symbols: npt.ArrayLike) -> float:
    """Length of the symbol string without zeros and repeats, relative to its full length."""
    s = np.asarray(symbols, dtype=np.int64)
    if s.size < 1:
        raise DomainError("partial information needs at least 1 symbol")
    nonzero = s[s != 0]
    if nonzero.size == 0:
        return 0.0
    collapsed = 1 + int(np.count_nonzero(nonzero[1:] != nonzero[:-1]))
    return collapsed / s.size


def ic_curves(sample: OrderedSample, config: IcConfig | None = None) -> IcCurves:
    config = config or IcConfig()
    psi, skipped = slopes(sample)
    if skipped:
        logger.warning("skipped %d coincident point pairs with different fitness", skipped)
    if psi.size < 2:
        raise DomainError(f"only {psi.size} usable slopes, at least 2 are needed")
    entropy = np.zeros(config.epsilons.size)
    partial = np.zeros(config.epsilons.size)
    steepest = float(np.max(np.abs(psi)))
    for i, epsilon in enumerate(config.epsilons):
        # every symbol is 0 from here on
        if epsilon >= steepest:
            break
        symbols = symbols_from_slopes(psi, float(epsilon))
        entropy[i] = entropy_h(symbols)
        partial[i] = partial_information(symbols)
    return IcCurves(config.epsilons, entropy, partial, skipped)


def compute_ic_features(sample: OrderedSample, config: IcConfig | None = None) -> IcFeatures:
    if not sample.ordered:
        raise ContractError("information content needs an ordered sample; order it first")
    if len(sample) < 3:
        raise DomainError(f"information content needs at least 3 points, got {len(sample)}")
    config = config or IcConfig()
    curves = ic_curves(sample, config)
    epsilons, entropy, partial = curves.epsilons, curves.entropy, curves.partial_information
    positive = epsilons > 0

    i_max = int(np.argmax(entropy))

    settled = positive & (entropy < config.settling_threshold)
    if settled.any():
        eps_s = math.log10(epsilons[int(np.argmax(settled))])
    else:
        logger.debug("entropy never settled below %s", config.settling_threshold)
        eps_s = math.log10(epsilons[-1])

    m0 = float(partial[0])
    first_positive = int(np.argmax(positive))
    if m0 == 0.0:
        eps_ratio = math.log10(epsilons[first_positive])
    else:
        halved = positive & (partial <= config.ratio * m0)
        index = int(np.argmax(halved)) if halved.any() else epsilons.size - 1
        eps_ratio = math.log10(epsilons[index])

    return IcFeatures(
        eps_s=eps_s,
        eps_max=float(epsilons[i_max]),
        eps_ratio=eps_ratio,
        h_max=float(entropy[i_max]),
        m0=m0,
        eps_s_settled=bool(settled.any()),
        skipped_pairs=curves.skipped_pairs,
    )
