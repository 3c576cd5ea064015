"""CSV artifacts.

Every file starts with one provenance comment line, then a header row. Readers
skip comment lines.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .errors import DomainError
from .sampling import OrderedSample

logger = logging.getLogger(__name__)

SAMPLE_COLUMN = re.compile(r"x(\d+)")


@dataclass(frozen=True)
class Provenance:
    config_hash: str
    seed: int
    version: str = __version__

    def comment(self) -> str:
        return f"# config-hash={self.config_hash}, seed={self.seed}, version={self.version}"


def write_csv(frame: pd.DataFrame, path: Path, provenance: Provenance) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as stream:
        stream.write(provenance.comment() + "\n")
        frame.to_csv(stream, index=False, lineterminator="\n")
    logger.info("wrote %d rows to %s", len(frame), path)
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def sample_frame(sample: OrderedSample) -> pd.DataFrame:
    frame = pd.DataFrame(sample.points, columns=[f"x{i}" for i in range(sample.dimension)])
    if sample.fitness is not None:
        frame["y"] = sample.fitness
    return frame


def frame_to_sample(frame: pd.DataFrame, ordered: bool = True) -> OrderedSample:
    """Rebuild a sample from ``x0..x{d-1}`` columns and an optional ``y`` column."""
    indices = sorted(
        int(match.group(1))
        for column in frame.columns
        if (match := SAMPLE_COLUMN.fullmatch(str(column)))
    )
    if not indices:
        raise DomainError("sample file has no coordinate columns x0..x{d-1}")
    if indices != list(range(len(indices))):
        raise DomainError(f"sample coordinate columns are not contiguous: {indices}")
    points = frame[[f"x{i}" for i in indices]].to_numpy(dtype=np.float64)
    fitness = frame["y"].to_numpy(dtype=np.float64) if "y" in frame.columns else None
    return OrderedSample(points, fitness, ordered)


def write_sample(sample: OrderedSample, path: Path, provenance: Provenance) -> Path:
    return write_csv(sample_frame(sample), path, provenance)


def read_sample(path: Path, ordered: bool = True) -> OrderedSample:
    return frame_to_sample(read_csv(path), ordered)
