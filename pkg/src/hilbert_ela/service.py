"""Experiment commands.

Every sweep is split into cells that only depend on the config and on their
own coordinates, so cells can run in any process in any order. Each cell
draws from its own ``derive_rng(seed, stream, *coordinates)`` stream.
"""

from __future__ import annotations

import enum
import logging
import time
import typing as t
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pandas as pd

from . import benchmarks
from .artifacts import Provenance, read_csv, read_sample, write_csv, write_sample
from .classify import SplitMode, accuracy, holdout_split, permutation_importance, random_split
from .config import ExperimentConfig, config_hash
from .coverage import (
    CoverageResult,
    coverage_distance,
    coverage_ranks,
    results_frame,
    summarise_coverage,
)
from .errors import DomainError, ElaError
from .executor import Executor, SequentialExecutor
from .features import FEATURE_NAMES, IcConfig, compute_ic_features
from .ordering import (
    OrderingStrategy,
    apply_ordering,
    ordering_permutation,
    step_size_summary,
    step_sizes,
)
from .output import Output
from .sampling import OrderedSample, Sampler, SearchSpace, derive_rng, draw_sample, uniform_sample

logger = logging.getLogger(__name__)

T = t.TypeVar("T")

# Label of the ordering that keeps the sampler's own order
KEEP_ORDER = "none"

FEATURE_COLUMNS = [
    "function",
    "group",
    "instance",
    "dim",
    "n",
    "sampler",
    "ordering",
    "seed",
    *FEATURE_NAMES,
]
TIMING_COLUMNS = ["mode", "strategy", "d", "n", "run", "seconds"]


class Stream(enum.IntEnum):
    """First key of every derived random stream, one per command."""

    SAMPLE = 1
    ORDER = 2
    FEATURES = 3
    COVERAGE = 4
    TIMING = 5
    CLASSIFY = 6


class TimingMode(str, enum.Enum):
    SAMPLING = "sampling"
    ORDERING = "ordering"
    TOTAL = "total"


# Reference samples use a key no sampler uses
_REFERENCE_KEY = len(Sampler)


def sampler_key(sampler: Sampler) -> int:
    return list(Sampler).index(sampler)


def ordering_key(ordering: OrderingStrategy | None) -> int:
    return 0 if ordering is None else list(OrderingStrategy).index(ordering) + 1


def ordering_label(ordering: OrderingStrategy | None) -> str:
    return KEEP_ORDER if ordering is None else ordering.value


## Requests


@dataclass
class SampleRequest:
    sampler: Sampler
    dimension: int | None = None
    size: int | None = None
    function_id: int | None = None
    instance: int = 1
    run: int = 0


@dataclass
class OrderRequest:
    input: Path
    ordering: OrderingStrategy | None
    run: int = 0


@dataclass
class FeaturesRequest:
    input: Path | None = None
    keep_order: bool = False


@dataclass
class CoverageRequest:
    pass


@dataclass
class TimingRequest:
    mode: TimingMode = TimingMode.SAMPLING


@dataclass
class ClassifyRequest:
    input: Path | None = None


Request: t.TypeAlias = (
    SampleRequest
    | OrderRequest
    | FeaturesRequest
    | CoverageRequest
    | TimingRequest
    | ClassifyRequest
)


## Cells


@dataclass
class CellOutcome(t.Generic[T]):
    items: list[T] = field(default_factory=list[T])
    failures: list[str] = field(default_factory=list[str])


@dataclass(frozen=True)
class FeaturesCell:
    config: ExperimentConfig
    dimension: int
    size: int
    sampler: Sampler
    run: int

    def context(self) -> str:
        return f"d={self.dimension} n={self.size} sampler={self.sampler.value} run={self.run}"


@dataclass(frozen=True)
class CoverageCell:
    config: ExperimentConfig
    dimension: int
    size: int
    run: int


@dataclass(frozen=True)
class TimingCell:
    config: ExperimentConfig
    mode: TimingMode
    dimension: int
    size: int
    run: int


def bounding_space(sample: OrderedSample) -> SearchSpace:
    """Smallest box holding every point of a sample read from a file."""
    lower, upper = sample.points.min(axis=0), sample.points.max(axis=0)
    # a flat axis still needs a non-empty box
    return SearchSpace(lower, np.where(upper > lower, upper, lower + 1.0))


def cell_orderings(config: ExperimentConfig, sample: OrderedSample) -> list[OrderingStrategy | None]:
    """Configured orderings, plus the sampler's own order when it produced an ordered sample."""
    orderings: list[OrderingStrategy | None] = list(config.orderings)
    if sample.ordered:
        orderings.insert(0, None)
    return orderings


def cell_functions(config: ExperimentConfig, dimension: int) -> list[benchmarks.ObjectiveFunction]:
    functions = benchmarks.suite(dimension, config.instances)
    if config.control:
        functions.append(benchmarks.control_function(dimension))
    return functions


def run_features_cell(cell: FeaturesCell) -> CellOutcome[dict[str, t.Any]]:
    """Draw one sample, then compute features for every function and ordering on it."""
    config = cell.config
    outcome = CellOutcome[dict[str, t.Any]]()
    coordinates = (cell.dimension, cell.size, sampler_key(cell.sampler), cell.run)
    space = SearchSpace.cube(cell.dimension)
    ic_config = IcConfig(settling_threshold=config.settling_threshold, ratio=config.ratio)
    try:
        rng = derive_rng(config.seed, Stream.FEATURES, *coordinates)
        sample = draw_sample(cell.sampler, space, cell.size, rng, config.strategy)
        functions = cell_functions(config, cell.dimension)
        permutations: dict[OrderingStrategy | None, npt.NDArray[np.intp] | None] = {}
        for ordering in cell_orderings(config, sample):
            order_rng = derive_rng(config.seed, Stream.ORDER, *coordinates, ordering_key(ordering))
            permutations[ordering] = (
                None if ordering is None else ordering_permutation(sample, ordering, space, order_rng)
            )
    except ElaError as exc:
        outcome.failures.append(f"{cell.context()}: {exc.msg}")
        return outcome
    for f in functions:
        evaluated = sample.with_fitness(benchmarks.evaluate_many(f, sample.points))
        for ordering, permutation in permutations.items():
            ordered = evaluated if permutation is None else evaluated.take(permutation)
            try:
                features = compute_ic_features(ordered, ic_config)
            except ElaError as exc:
                outcome.failures.append(
                    f"{cell.context()} function={f.id} instance={f.instance} "
                    f"ordering={ordering_label(ordering)}: {exc.msg}"
                )
                continue
            outcome.items.append(
                {
                    "function": f.id,
                    "group": f.group,
                    "instance": f.instance,
                    "dim": cell.dimension,
                    "n": cell.size,
                    "sampler": cell.sampler.value,
                    "ordering": ordering_label(ordering),
                    "seed": cell.run,
                    **features.as_dict(),
                }
            )
    return outcome


def run_coverage_cell(cell: CoverageCell) -> CellOutcome[CoverageResult]:
    """Coverage distance between every sampler's sample and one larger uniform reference sample."""
    config = cell.config
    outcome = CellOutcome[CoverageResult]()
    coordinates = (cell.dimension, cell.size, cell.run)
    space = SearchSpace.cube(cell.dimension)
    try:
        reference = uniform_sample(
            space,
            config.reference_mult * cell.size,
            derive_rng(config.seed, Stream.COVERAGE, *coordinates, _REFERENCE_KEY),
        )
    except ElaError as exc:
        outcome.failures.append(f"d={cell.dimension} n={cell.size} run={cell.run}: {exc.msg}")
        return outcome
    for sampler in config.samplers:
        rng = derive_rng(config.seed, Stream.COVERAGE, *coordinates, sampler_key(sampler))
        try:
            sample = draw_sample(sampler, space, cell.size, rng, config.strategy)
        except ElaError as exc:
            outcome.failures.append(
                f"d={cell.dimension} n={cell.size} run={cell.run} sampler={sampler.value}: {exc.msg}"
            )
            continue
        distance = coverage_distance(sample.points, reference.points, config.coverage_metric)
        outcome.items.append(
            CoverageResult(cell.dimension, cell.size, sampler.value, cell.run, distance)
        )
    return outcome


def _timed(fn: t.Callable[..., T], *args: t.Any) -> tuple[T, float]:
    start = time.perf_counter()
    result = fn(*args)
    return result, time.perf_counter() - start


def run_timing_cell(cell: TimingCell) -> CellOutcome[dict[str, t.Any]]:
    """Wall-clock seconds per strategy; function evaluation and file I/O are never timed."""
    config = cell.config
    outcome = CellOutcome[dict[str, t.Any]]()
    space = SearchSpace.cube(cell.dimension)
    coordinates = (cell.dimension, cell.size, cell.run)
    ic_config = IcConfig(settling_threshold=config.settling_threshold, ratio=config.ratio)

    def record(strategy: str, seconds: float) -> None:
        outcome.items.append(
            {
                "mode": cell.mode.value,
                "strategy": strategy,
                "d": cell.dimension,
                "n": cell.size,
                "run": cell.run,
                "seconds": seconds,
            }
        )

    def draw(sampler: Sampler) -> OrderedSample:
        rng = derive_rng(config.seed, Stream.TIMING, *coordinates, sampler_key(sampler))
        return draw_sample(sampler, space, cell.size, rng, config.strategy)

    def order(sample: OrderedSample, ordering: OrderingStrategy | None) -> OrderedSample:
        rng = derive_rng(config.seed, Stream.TIMING, *coordinates, _REFERENCE_KEY, ordering_key(ordering))
        return apply_ordering(sample, ordering, space, rng)

    def order_and_measure(sample: OrderedSample, ordering: OrderingStrategy | None) -> object:
        return compute_ic_features(order(sample, ordering), ic_config)

    try:
        if cell.mode is TimingMode.SAMPLING:
            for sampler in config.samplers:
                _, seconds = _timed(draw, sampler)
                record(sampler.value, seconds)
        elif cell.mode is TimingMode.ORDERING:
            sample = draw(Sampler.LHS)
            for ordering in config.orderings:
                _, seconds = _timed(order, sample, ordering)
                record(ordering.value, seconds)
        else:
            sphere = benchmarks.BASE_FUNCTIONS[1].fn
            for sampler in config.samplers:
                sample, sampling_seconds = _timed(draw, sampler)
                evaluated = sample.with_fitness(sphere(sample.points))
                for ordering in cell_orderings(config, sample):
                    _, seconds = _timed(order_and_measure, evaluated, ordering)
                    record(f"{sampler.value}+{ordering_label(ordering)}", sampling_seconds + seconds)
    except ElaError as exc:
        outcome.failures.append(
            f"mode={cell.mode.value} d={cell.dimension} n={cell.size} run={cell.run}: {exc.msg}"
        )
    return outcome


## Service


class Service:
    def __init__(
        self,
        config: ExperimentConfig,
        output: Output,
        executor: Executor,
    ) -> None:
        self.executor = executor
        self.output = output
        self.config = config
        self.provenance = Provenance(config_hash(config), config.seed)

    @property
    def output_dir(self) -> Path:
        return self.config.output_dir

    def execute(self, request: Request) -> int:
        """Run one command and return its exit code: 0 on success, 2 when some cells failed."""
        if isinstance(request, SampleRequest):
            return self.sample(request)
        if isinstance(request, OrderRequest):
            return self.order(request)
        if isinstance(request, FeaturesRequest):
            return self.features(request)
        if isinstance(request, CoverageRequest):
            return self.coverage(request)
        if isinstance(request, TimingRequest):
            return self.timing(request)
        return self.classify(request)

    def _write(self, frame: pd.DataFrame, name: str) -> Path:
        path = write_csv(frame, self.output_dir / name, self.provenance)
        self.output.write(f"wrote {path}")
        return path

    def _gather(self, outcomes: list[CellOutcome[T]]) -> tuple[list[T], int]:
        items: list[T] = []
        failures = 0
        for outcome in outcomes:
            items.extend(outcome.items)
            for failure in outcome.failures:
                logger.error("cell failed: %s", failure)
            failures += len(outcome.failures)
        return items, failures

    def _exit_code(self, failures: int, total: str) -> int:
        if failures:
            self.output.write_error(f"hilbert-ela: error: {failures} {total} failed")
            return 2
        return 0

    def sample(self, request: SampleRequest) -> int:
        """Draw one sample, optionally evaluated on a suite function, and write it."""
        d = request.dimension or self.config.dims[0]
        n = request.size or self.config.mults[0] * d
        rng = derive_rng(self.config.seed, Stream.SAMPLE, d, n, sampler_key(request.sampler), request.run)
        sample = draw_sample(request.sampler, SearchSpace.cube(d), n, rng, self.config.strategy)
        if request.function_id is not None:
            if request.function_id == benchmarks.CONTROL_ID:
                f = benchmarks.control_function(d, request.instance)
            else:
                f = benchmarks.make_function(request.function_id, d, request.instance)
            sample = sample.with_fitness(benchmarks.evaluate_many(f, sample.points))
        path = write_sample(sample, self.output_dir / "sample.csv", self.provenance)
        self.output.write(f"wrote {path}")
        return 0

    def order(self, request: OrderRequest) -> int:
        """Reorder a sample file and write the ordered sample with its step sizes."""
        sample = read_sample(request.input, ordered=request.ordering is None)
        space = bounding_space(sample)
        rng = derive_rng(self.config.seed, Stream.ORDER, len(sample), ordering_key(request.ordering), request.run)
        ordered = apply_ordering(sample, request.ordering, space, rng)
        path = write_sample(ordered, self.output_dir / "ordered.csv", self.provenance)
        self.output.write(f"wrote {path}")
        steps = step_sizes(ordered)
        self._write(pd.DataFrame({"step_index": np.arange(1, steps.size + 1), "distance": steps}), "steps.csv")
        summary = step_size_summary(steps)
        self.output.write(
            f"steps: mean={summary.mean:.6g} std={summary.std:.6g} max={summary.max:.6g} "
            f"skewness={summary.skewness:.6g} kurtosis={summary.kurtosis:.6g}"
        )
        return 0

    def features(self, request: FeaturesRequest) -> int:
        if request.input is not None:
            return self._features_from_file(request.input, request.keep_order)
        cells = [
            FeaturesCell(self.config, d, n, sampler, run)
            for d, n in self.config.sizes()
            for sampler in self.config.samplers
            for run in range(self.config.reps)
        ]
        logger.info("computing features over %d cells", len(cells))
        rows, failures = self._gather(self.executor.map(run_features_cell, cells))
        self._write(pd.DataFrame(rows, columns=FEATURE_COLUMNS), "features.csv")
        manifest = pd.concat(
            [benchmarks.suite_manifest(cell_functions(self.config, d)) for d in self.config.dims],
            ignore_index=True,
        )
        self._write(manifest, "suite.csv")
        return self._exit_code(failures, "feature cells")

    def _features_from_file(self, path: Path, keep_order: bool) -> int:
        sample = read_sample(path, ordered=keep_order)
        if sample.fitness is None:
            raise DomainError(f"{path} has no 'y' column to compute features from")
        space = bounding_space(sample)
        orderings: list[OrderingStrategy | None] = [None] if keep_order else list(self.config.orderings)
        ic_config = IcConfig(settling_threshold=self.config.settling_threshold, ratio=self.config.ratio)
        rows: list[dict[str, t.Any]] = []
        for ordering in orderings:
            rng = derive_rng(self.config.seed, Stream.ORDER, len(sample), ordering_key(ordering))
            features = compute_ic_features(apply_ordering(sample, ordering, space, rng), ic_config)
            rows.append({"ordering": ordering_label(ordering), **features.as_dict()})
        self._write(pd.DataFrame(rows, columns=["ordering", *FEATURE_NAMES]), "features.csv")
        return 0

    def coverage(self, request: CoverageRequest) -> int:
        cells = [
            CoverageCell(self.config, d, n, run)
            for d, n in self.config.sizes()
            for run in range(self.config.reps)
        ]
        results, failures = self._gather(self.executor.map(run_coverage_cell, cells))
        self._write(results_frame(results), "coverage.csv")
        self._write(summarise_coverage(results), "coverage_summary.csv")
        if len(self.config.samplers) < 2:
            logger.warning("ranking needs at least 2 samplers, skipping coverage ranks")
        elif failures:
            logger.warning("some coverage cells failed, skipping coverage ranks")
        else:
            ranks = coverage_ranks(results)
            self._write(ranks, "coverage_ranks.csv")
            for row in ranks.itertuples(index=False):
                self.output.write(f"{row.sampler}: mean rank {row.mean_rank:.4f}")
        return self._exit_code(failures, "coverage cells")

    def timing(self, request: TimingRequest) -> int:
        cells = [
            TimingCell(self.config, request.mode, d, n, run)
            for d, n in self.config.sizes()
            for run in range(self.config.reps)
        ]
        # Measurements always run one at a time in this process
        rows, failures = self._gather(SequentialExecutor().map(run_timing_cell, cells))
        self._write(pd.DataFrame(rows, columns=TIMING_COLUMNS), "timing.csv")
        return self._exit_code(failures, "timing cells")

    def classify(self, request: ClassifyRequest) -> int:
        """kNN accuracy and permutation importance per group of feature records.

        The instances split holds out ``test_instances`` within every
        (d, n, sampler, ordering) group. The random split pools dimensions and
        sizes per (sampler, ordering) and holds out a stratified third.
        """
        path = request.input or self.output_dir / "features.csv"
        frame = read_csv(path)
        missing = [column for column in FEATURE_COLUMNS if column not in frame.columns]
        if missing:
            raise DomainError(f"{path} is missing feature columns: {missing}")
        frame = frame[frame["group"] != 0]
        finite = np.isfinite(frame[list(FEATURE_NAMES)].to_numpy(dtype=np.float64)).all(axis=1)
        if not finite.all():
            logger.warning("dropping %d records with non-finite features", int((~finite).sum()))
            frame = frame[finite]
        accuracy_rows: list[dict[str, t.Any]] = []
        importance_frames: list[pd.DataFrame] = []
        failures = 0
        pooled = self.config.split is SplitMode.RANDOM
        keys = ["sampler", "ordering"] if pooled else ["dim", "n", "sampler", "ordering"]
        for index, (key, group) in enumerate(frame.groupby(keys, sort=True)):
            context = dict(zip(keys, t.cast(tuple[t.Any, ...], key)))
            seed = int(derive_rng(self.config.seed, Stream.CLASSIFY, index).integers(2**31))
            try:
                if pooled:
                    train, test = random_split(group, test_fraction=1 / 3, seed=seed)
                else:
                    train, test = holdout_split(group, self.config.test_instances)
                score = accuracy(train, test, self.config.k)
                importance = permutation_importance(
                    train, test, self.config.k, self.config.importance_reps, seed
                )
            except ElaError as exc:
                logger.error("classification failed for %s: %s", context, exc.msg)
                failures += 1
                continue
            accuracy_rows.append({**context, "train": len(train), "test": len(test), "accuracy": score})
            importance_frames.append(importance.table.assign(**context))
        self._write(
            pd.DataFrame(accuracy_rows, columns=[*keys, "train", "test", "accuracy"]),
            "accuracy.csv",
        )
        importance_columns = [*keys, "feature", "mean_drop", "std_drop"]
        importance_frame = (
            pd.concat(importance_frames, ignore_index=True)[importance_columns]
            if importance_frames
            else pd.DataFrame(columns=importance_columns)
        )
        self._write(importance_frame, "importance.csv")
        return self._exit_code(failures, "classification groups")
