import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from hilbert_ela.artifacts import Provenance, read_csv, read_sample, write_csv, write_sample
from hilbert_ela.classify import SplitMode
from hilbert_ela.config import ExperimentConfig
from hilbert_ela.coverage import HausdorffVariant
from hilbert_ela.errors import DomainError
from hilbert_ela.executor import Executor, PoolExecutor, SequentialExecutor
from hilbert_ela.features import FEATURE_NAMES
from hilbert_ela.ordering import OrderingStrategy
from hilbert_ela.output import make_capture_output
from hilbert_ela.sampling import OrderedSample, Sampler, derive_rng
from hilbert_ela.service import (
    FEATURE_COLUMNS,
    TIMING_COLUMNS,
    ClassifyRequest,
    CoverageRequest,
    FeaturesRequest,
    OrderRequest,
    SampleRequest,
    Service,
    TimingMode,
    TimingRequest,
)

SMALL = ExperimentConfig(
    dims=(2,),
    mults=(10,),
    reps=2,
    seed=11,
    instances=(1, 2),
    test_instances=(2,),
)


class ServiceTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self.tmpdir = tempfile.TemporaryDirectory()
        self.out = Path(self.tmpdir.name)

    def tearDown(self) -> None:
        self.tmpdir.cleanup()

    def make_service(
        self, config: ExperimentConfig = SMALL, executor: Executor | None = None, out: Path | None = None
    ) -> tuple[Service, Path]:
        out = out or self.out
        self.stdout, self.stderr, output = make_capture_output()
        service = Service(replace(config, out=out.as_posix()), output, executor or SequentialExecutor())
        return service, out


class TestSample(ServiceTestCase):
    def test_evaluated_sample(self) -> None:
        service, out = self.make_service()
        code = service.execute(SampleRequest(Sampler.LHS, dimension=3, size=30, function_id=1))
        self.assertEqual(code, 0)
        self.assertEqual(self.stdout.getvalue(), f"wrote {out / 'sample.csv'}\n")
        sample = read_sample(out / "sample.csv")
        self.assertEqual(sample.points.shape, (30, 3))
        assert sample.fitness is not None
        self.assertEqual(sample.fitness.shape, (30,))

    def test_defaults_from_config(self) -> None:
        service, out = self.make_service()
        self.assertEqual(service.execute(SampleRequest(Sampler.HILBERT)), 0)
        frame = read_csv(out / "sample.csv")
        self.assertEqual(list(frame.columns), ["x0", "x1"])
        self.assertEqual(len(frame), 20)

    def test_provenance_comment(self) -> None:
        service, out = self.make_service()
        service.execute(SampleRequest(Sampler.UNIFORM))
        first_line = (out / "sample.csv").read_text().splitlines()[0]
        self.assertEqual(first_line, service.provenance.comment())


class TestOrder(ServiceTestCase):
    def write_input(self) -> Path:
        sample = OrderedSample(derive_rng(1).random((25, 2)), derive_rng(2).random(25))
        return write_sample(sample, self.out / "input" / "points.csv", Provenance("x", 0))

    def test_nearest_neighbour(self) -> None:
        path = self.write_input()
        service, out = self.make_service()
        code = service.execute(OrderRequest(path, OrderingStrategy.NEAREST_NEIGHBOUR))
        self.assertEqual(code, 0)
        ordered = read_sample(out / "ordered.csv")
        original = read_sample(path)
        np.testing.assert_array_equal(ordered.points[0], original.points[0])
        steps = read_csv(out / "steps.csv")
        self.assertEqual(list(steps.columns), ["step_index", "distance"])
        self.assertEqual(steps["step_index"].tolist(), list(range(1, 25)))
        self.assertIn("steps: mean=", self.stdout.getvalue())

    def test_keep_order(self) -> None:
        path = self.write_input()
        service, out = self.make_service()
        self.assertEqual(service.execute(OrderRequest(path, None)), 0)
        np.testing.assert_array_equal(read_sample(out / "ordered.csv").points, read_sample(path).points)

    def test_missing_input(self) -> None:
        service, _ = self.make_service()
        with self.assertRaises(FileNotFoundError):
            service.execute(OrderRequest(self.out / "missing.csv", OrderingStrategy.HILBERT))


class TestFeatures(ServiceTestCase):
    def test_sweep(self) -> None:
        config = replace(SMALL, reps=1, samplers=(Sampler.HILBERT, Sampler.LHS))
        service, out = self.make_service(config)
        self.assertEqual(service.execute(FeaturesRequest()), 0)
        self.assertEqual(self.stderr.getvalue(), "")
        frame = read_csv(out / "features.csv")
        self.assertEqual(list(frame.columns), FEATURE_COLUMNS)
        # 20 suite functions plus the control, on 4 orderings of the Hilbert sample and 3 of LHS
        self.assertEqual(len(frame), 21 * 4 + 21 * 3)
        by_sampler = frame.groupby("sampler")["ordering"].unique()
        self.assertEqual(sorted(by_sampler["hilbert"]), ["hilbert", "nn", "none", "random"])
        self.assertEqual(sorted(by_sampler["lhs"]), ["hilbert", "nn", "random"])
        control = frame[frame["group"] == 0]
        self.assertEqual(len(control), 7)
        self.assertTrue((control["h_max"] == 0.0).all())
        self.assertTrue((control["m0"] == 0.0).all())
        self.assertTrue(frame["h_max"].between(0.0, 1.0).all())
        suite = read_csv(out / "suite.csv")
        self.assertEqual(len(suite), 21)

    def test_deterministic(self) -> None:
        config = replace(SMALL, reps=1, samplers=(Sampler.LHS,), orderings=(OrderingStrategy.RANDOM,))
        first, first_out = self.make_service(config, out=self.out / "a")
        second, second_out = self.make_service(config, out=self.out / "b")
        first.execute(FeaturesRequest())
        second.execute(FeaturesRequest())
        pd.testing.assert_frame_equal(
            read_csv(first_out / "features.csv"), read_csv(second_out / "features.csv")
        )

    def test_from_file(self) -> None:
        points = derive_rng(3).random((40, 3))
        path = write_sample(
            OrderedSample(points, points.sum(axis=1)), self.out / "xy.csv", Provenance("x", 0)
        )
        service, out = self.make_service()
        self.assertEqual(service.execute(FeaturesRequest(input=path)), 0)
        frame = read_csv(out / "features.csv")
        self.assertEqual(frame["ordering"].tolist(), ["hilbert", "nn", "random"])
        self.assertEqual(list(frame.columns), ["ordering", *FEATURE_NAMES])

    def test_from_file_keeping_order(self) -> None:
        points = derive_rng(4).random((40, 2))
        path = write_sample(
            OrderedSample(points, points[:, 0]), self.out / "xy.csv", Provenance("x", 0)
        )
        service, out = self.make_service()
        self.assertEqual(service.execute(FeaturesRequest(input=path, keep_order=True)), 0)
        self.assertEqual(read_csv(out / "features.csv")["ordering"].tolist(), ["none"])

    def test_from_file_without_fitness(self) -> None:
        path = write_sample(
            OrderedSample(derive_rng(5).random((10, 2))), self.out / "x.csv", Provenance("x", 0)
        )
        service, _ = self.make_service()
        with self.assertRaises(DomainError):
            service.execute(FeaturesRequest(input=path))


class TestCoverage(ServiceTestCase):
    def test_one_row_per_sampler_and_run(self) -> None:
        service, out = self.make_service()
        self.assertEqual(service.execute(CoverageRequest()), 0)
        frame = read_csv(out / "coverage.csv")
        self.assertEqual(len(frame), 6)
        self.assertEqual(sorted(frame["sampler"].unique()), ["hilbert", "lhs", "random_walk"])
        self.assertTrue((frame["hausdorff"] > 0).all())
        ranks = read_csv(out / "coverage_ranks.csv")
        self.assertAlmostEqual(ranks["mean_rank"].sum(), 6.0)
        self.assertIn("hilbert: mean rank ", self.stdout.getvalue())
        self.assertEqual(len(read_csv(out / "coverage_summary.csv")), 3)

    def test_ranks_over_several_dimensions_and_sizes(self) -> None:
        service, out = self.make_service(replace(SMALL, dims=(2, 3), mults=(10, 20)))
        self.assertEqual(service.execute(CoverageRequest()), 0)
        self.assertEqual(len(read_csv(out / "coverage.csv")), 4 * 2 * 3)
        self.assertEqual(len(read_csv(out / "coverage_summary.csv")), 4 * 3)
        self.assertAlmostEqual(read_csv(out / "coverage_ranks.csv")["mean_rank"].sum(), 6.0)

    def test_classic_metric_is_not_smaller(self) -> None:
        averaged, first_out = self.make_service(out=self.out / "a")
        classic, second_out = self.make_service(
            replace(SMALL, coverage_metric=HausdorffVariant.MAX), out=self.out / "b"
        )
        averaged.execute(CoverageRequest())
        classic.execute(CoverageRequest())
        mean = read_csv(first_out / "coverage.csv")["hausdorff"]
        worst = read_csv(second_out / "coverage.csv")["hausdorff"]
        self.assertTrue((worst >= mean).all())

    def test_same_results_in_a_process_pool(self) -> None:
        sequential, first_out = self.make_service(out=self.out / "a")
        pooled, second_out = self.make_service(executor=PoolExecutor(2), out=self.out / "b")
        sequential.execute(CoverageRequest())
        pooled.execute(CoverageRequest())
        pd.testing.assert_frame_equal(
            read_csv(first_out / "coverage.csv"), read_csv(second_out / "coverage.csv")
        )

    def test_single_sampler_skips_ranks(self) -> None:
        service, out = self.make_service(replace(SMALL, samplers=(Sampler.LHS,)))
        with self.assertLogs("hilbert_ela.service", level="WARNING"):
            self.assertEqual(service.execute(CoverageRequest()), 0)
        self.assertFalse((out / "coverage_ranks.csv").exists())

    def test_failed_cells_give_exit_code_two(self) -> None:
        # 400 dimensions need more index bits than the curve supports
        config = replace(SMALL, dims=(400,), mults=(1,), reps=1, samplers=(Sampler.HILBERT,))
        service, out = self.make_service(config)
        with self.assertLogs("hilbert_ela.service", level="ERROR") as logs:
            code = service.execute(CoverageRequest())
        self.assertEqual(code, 2)
        self.assertIn("sampler=hilbert", logs.output[0])
        self.assertEqual(self.stderr.getvalue(), "hilbert-ela: error: 1 coverage cells failed\n")
        self.assertEqual(len(read_csv(out / "coverage.csv")), 0)


class TestTiming(ServiceTestCase):
    def test_sampling(self) -> None:
        service, out = self.make_service(replace(SMALL, reps=1))
        self.assertEqual(service.execute(TimingRequest(TimingMode.SAMPLING)), 0)
        frame = read_csv(out / "timing.csv")
        self.assertEqual(list(frame.columns), TIMING_COLUMNS)
        self.assertEqual(frame["strategy"].tolist(), ["hilbert", "lhs", "random_walk"])
        self.assertTrue((frame["seconds"] > 0).all())

    def test_ordering(self) -> None:
        service, out = self.make_service(replace(SMALL, reps=1))
        self.assertEqual(service.execute(TimingRequest(TimingMode.ORDERING)), 0)
        self.assertEqual(
            read_csv(out / "timing.csv")["strategy"].tolist(), ["hilbert", "nn", "random"]
        )

    def test_total(self) -> None:
        service, out = self.make_service(replace(SMALL, reps=1, samplers=(Sampler.HILBERT, Sampler.LHS)))
        self.assertEqual(service.execute(TimingRequest(TimingMode.TOTAL)), 0)
        frame = read_csv(out / "timing.csv")
        self.assertEqual(len(frame), 4 + 3)
        self.assertIn("hilbert+none", frame["strategy"].tolist())
        self.assertIn("lhs+nn", frame["strategy"].tolist())
        self.assertTrue((frame["mode"] == "total").all())


class TestClassify(ServiceTestCase):
    config = replace(SMALL, instances=(1, 2, 3), test_instances=(3,), k=3, importance_reps=2)

    def write_features(self, path: Path) -> None:
        rng = derive_rng(6)
        rows = []
        for group in range(0, 6):
            for instance in (1, 2, 3):
                for seed in range(4):
                    values = 10.0 * group + rng.normal(scale=0.5, size=len(FEATURE_NAMES))
                    rows.append(
                        {
                            "function": group,
                            "group": group,
                            "instance": instance,
                            "dim": 2,
                            "n": 20,
                            "sampler": "lhs",
                            "ordering": "hilbert",
                            "seed": seed,
                            **dict(zip(FEATURE_NAMES, values.tolist())),
                        }
                    )
        write_csv(pd.DataFrame(rows, columns=FEATURE_COLUMNS), path, Provenance("x", 0))

    def test_accuracy_and_importance(self) -> None:
        service, out = self.make_service(self.config)
        self.write_features(out / "features.csv")
        self.assertEqual(service.execute(ClassifyRequest()), 0)
        accuracy = read_csv(out / "accuracy.csv")
        self.assertEqual(len(accuracy), 1)
        row = accuracy.iloc[0]
        # control records are left out
        self.assertEqual((row["train"], row["test"]), (40, 20))
        self.assertEqual(row["accuracy"], 1.0)
        importance = read_csv(out / "importance.csv")
        self.assertEqual(importance["feature"].tolist(), list(FEATURE_NAMES))
        self.assertEqual(
            list(importance.columns), ["dim", "n", "sampler", "ordering", "feature", "mean_drop", "std_drop"]
        )

    def test_random_split_pools_sizes_per_ordering(self) -> None:
        service, out = self.make_service(replace(self.config, split=SplitMode.RANDOM))
        self.write_features(out / "features.csv")
        self.assertEqual(service.execute(ClassifyRequest()), 0)
        accuracy = read_csv(out / "accuracy.csv")
        self.assertEqual(list(accuracy.columns), ["sampler", "ordering", "train", "test", "accuracy"])
        row = accuracy.iloc[0]
        self.assertEqual((row["train"], row["test"]), (40, 20))
        self.assertEqual(row["accuracy"], 1.0)
        importance = read_csv(out / "importance.csv")
        self.assertEqual(
            list(importance.columns), ["sampler", "ordering", "feature", "mean_drop", "std_drop"]
        )

    def test_explicit_input(self) -> None:
        service, out = self.make_service(self.config)
        path = self.out / "elsewhere.csv"
        self.write_features(path)
        self.assertEqual(service.execute(ClassifyRequest(input=path)), 0)
        self.assertTrue((out / "accuracy.csv").exists())

    def test_missing_columns(self) -> None:
        service, out = self.make_service(self.config)
        write_csv(pd.DataFrame({"group": [1]}), out / "features.csv", Provenance("x", 0))
        with self.assertRaises(DomainError):
            service.execute(ClassifyRequest())

    def test_missing_test_instance_fails_the_group(self) -> None:
        service, out = self.make_service(replace(self.config, instances=(1, 2, 3, 4), test_instances=(4,)))
        self.write_features(out / "features.csv")
        with self.assertLogs("hilbert_ela.service", level="ERROR"):
            code = service.execute(ClassifyRequest())
        self.assertEqual(code, 2)
        self.assertEqual(len(read_csv(out / "accuracy.csv")), 0)
