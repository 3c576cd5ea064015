import logging
import tempfile
import unittest
from pathlib import Path

from hilbert_ela.cli import run
from hilbert_ela.output import LOGGER_NAME, make_capture_output

from .test_cli_parser import USAGE

SMALL_CONFIG = """\
[experiment]
dims = [2]
mults = [10]
reps = 2
seed = 5
instances = [1, 2]
test_instances = [2]
"""


class TestCLIRun(unittest.TestCase):
    def setUp(self) -> None:
        self.tmpdir = tempfile.TemporaryDirectory()
        self.root = Path(self.tmpdir.name)
        self.config_file = self.root / "experiment.toml"
        self.config_file.write_text(SMALL_CONFIG)
        self.out = self.root / "results"

    def tearDown(self) -> None:
        logger = logging.getLogger(LOGGER_NAME)
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
        logger.setLevel(logging.NOTSET)
        self.tmpdir.cleanup()

    def run_cli(self, *args: str) -> tuple[int, str, str]:
        stdout, stderr, output = make_capture_output()
        code = run(
            output, [*args, "--config", self.config_file.as_posix(), "--out", self.out.as_posix()]
        )
        return code, stdout.getvalue(), stderr.getvalue()

    def test_config_file_does_not_exist(self) -> None:
        stdout, stderr, output = make_capture_output()
        code = run(output, ["coverage", "--config", "does-not-exist.toml"])
        self.assertEqual(code, 1)
        self.assertEqual(stdout.getvalue(), "")
        self.assertEqual(
            stderr.getvalue(), "hilbert-ela: error: config file not found: does-not-exist.toml\n"
        )

    def test_invalid_config(self) -> None:
        self.config_file.write_text("[experiment]\nreps = ")
        code, stdout, stderr = self.run_cli("coverage")
        self.assertEqual(code, 1)
        self.assertEqual(stdout, "")
        self.assertEqual(
            stderr,
            f"hilbert-ela: error: {self.config_file.as_posix()}:2:8: invalid value (at end of document)\n",
        )

    def test_invalid_option(self) -> None:
        self.config_file.write_text("[experiment]\nreps = 0\n")
        code, stdout, stderr = self.run_cli("coverage")
        self.assertEqual(code, 1)
        self.assertEqual(stderr, "hilbert-ela: error: option 'reps': must be at least 1, got 0.\n")

    def test_invalid_override(self) -> None:
        code, _, stderr = self.run_cli("coverage", "--seed", "-3")
        self.assertEqual(code, 1)
        self.assertEqual(stderr, "hilbert-ela: error: option 'seed': must not be negative, got -3.\n")

    def test_help(self) -> None:
        stdout, stderr, output = make_capture_output()
        code = run(output, ["--help"])
        self.assertEqual(code, 0)
        self.assertTrue(stdout.getvalue().startswith(USAGE))
        self.assertEqual(stderr.getvalue(), "")

    def test_invalid_arg(self) -> None:
        stdout, stderr, output = make_capture_output()
        code = run(output, ["coverage", "--invalid"])
        self.assertEqual(code, 1)
        self.assertEqual(stdout.getvalue(), "")
        self.assertEqual(
            stderr.getvalue(), f"{USAGE}\nhilbert-ela: error: unrecognized arguments: --invalid\n"
        )

    def test_coverage(self) -> None:
        code, stdout, stderr = self.run_cli("coverage")
        self.assertEqual(code, 0)
        self.assertEqual(stderr, "")
        self.assertIn(f"wrote {self.out / 'coverage.csv'}\n", stdout)
        self.assertTrue((self.out / "coverage_ranks.csv").exists())

    def test_features_then_classify(self) -> None:
        code, _, _ = self.run_cli("features", "--samplers", "lhs", "--orderings", "hilbert", "--reps", "1")
        self.assertEqual(code, 0)
        code, stdout, _ = self.run_cli("classify")
        self.assertEqual(code, 0)
        self.assertIn("accuracy.csv", stdout)
        self.assertIn("importance.csv", stdout)

    def test_classify_with_random_split(self) -> None:
        self.run_cli("features", "--samplers", "lhs", "--orderings", "random", "--reps", "2")
        code, _, _ = self.run_cli("classify", "--split", "random")
        self.assertEqual(code, 0)
        accuracy = (self.out / "accuracy.csv").read_text()
        self.assertIn("sampler,ordering,train,test,accuracy", accuracy)

    def test_verbose_logs_to_stderr(self) -> None:
        code, _, stderr = self.run_cli("sample", "--sampler", "uniform", "-v")
        self.assertEqual(code, 0)
        self.assertIn("hilbert-ela: INFO: wrote 20 rows to", stderr)

    def test_missing_input_file(self) -> None:
        missing = self.root / "missing.csv"
        code, stdout, stderr = self.run_cli("classify", "--input", missing.as_posix())
        self.assertEqual(code, 1)
        self.assertEqual(stdout, "")
        self.assertEqual(stderr, f"hilbert-ela: error: file not found: {missing.as_posix()}\n")

    def test_domain_error(self) -> None:
        self.run_cli("sample", "--sampler", "lhs")
        code, _, stderr = self.run_cli("features", "--input", (self.out / "sample.csv").as_posix())
        self.assertEqual(code, 1)
        self.assertEqual(
            stderr,
            f"hilbert-ela: error: {(self.out / 'sample.csv').as_posix()} "
            "has no 'y' column to compute features from\n",
        )

    def test_partial_failure(self) -> None:
        code, _, stderr = self.run_cli(
            "coverage", "--dims", "400", "--mults", "1", "--reps", "1", "--samplers", "hilbert", "lhs"
        )
        self.assertEqual(code, 2)
        self.assertIn("hilbert-ela: ERROR: cell failed: d=400 n=400 run=0 sampler=hilbert", stderr)
        self.assertTrue(stderr.endswith("hilbert-ela: error: 1 coverage cells failed\n"))
