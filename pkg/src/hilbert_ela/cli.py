from __future__ import annotations

import argparse
import sys
import typing as t
from pathlib import Path
from types import TracebackType

from . import __version__
from .classify import SplitMode
from .config import (
    ExperimentConfig,
    InvalidConfigError,
    apply_overrides,
    parse_config_file,
)
from .coverage import HausdorffVariant
from .errors import ElaError
from .executor import make_default_executor
from .ordering import OrderingStrategy
from .output import Output, configure_logging, make_default_output
from .sampling import Sampler, Stochasticity
from .service import (
    KEEP_ORDER,
    ClassifyRequest,
    CoverageRequest,
    FeaturesRequest,
    OrderRequest,
    Request,
    SampleRequest,
    Service,
    TimingMode,
    TimingRequest,
)

PROG = "hilbert-ela"
DEFAULT_CONFIG = "pyproject.toml"


class Exit(Exception):
    """Errors raised by the command line argument parser."""

    def __init__(self, return_code: int, msg: str | list[str]) -> None:
        self.return_code = return_code
        self.msg = "\n".join(msg) if isinstance(msg, list) else msg
        super().__init__(self.msg)


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser that raises Exit instead of printing and exiting."""

    def __init__(self, *args: t.Any, **kwargs: t.Any) -> None:
        super().__init__(*args, **kwargs)
        self._messages: list[str] = []

    def _print_message(self, message: str, file: t.IO[str] | None = None) -> None:
        if message:
            self._messages.append(message.rstrip("\n"))

    def exit(self, status: int = 0, message: str | None = None) -> t.NoReturn:
        messages = self._messages + ([message.rstrip("\n")] if message else [])
        self._messages = []
        raise Exit(status, messages)

    def error(self, message: str) -> t.NoReturn:
        raise Exit(1, [self.format_usage().strip(), f"{PROG}: error: {message}"])


def _common_options() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "--config", "-c", default=None, help=f"TOML config file (default: {DEFAULT_CONFIG} when present)"
    )
    common.add_argument("--dims", nargs="+", type=int, help="Dimensions")
    common.add_argument("--mults", nargs="+", type=int, help="Sample size multipliers (n = mult * d)")
    common.add_argument("--reps", type=int, help="Independent runs per cell")
    common.add_argument("--seed", type=int, help="Parent seed of every random stream")
    common.add_argument(
        "--samplers", nargs="+", choices=[s.value for s in Sampler], help="Samplers to compare"
    )
    common.add_argument(
        "--orderings",
        nargs="+",
        choices=[o.value for o in OrderingStrategy],
        help="Orderings to compare",
    )
    common.add_argument(
        "--stochasticity",
        choices=[s.value for s in Stochasticity],
        help="Randomisation of Hilbert curve vertices",
    )
    common.add_argument("--out", help="Output directory")
    common.add_argument("--workers", type=int, help="Worker processes for sweeps")
    common.add_argument(
        "--verbose", "-v", action="count", default=0, help="Log more (-v info, -vv debug)"
    )
    return common


def create_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog=PROG,
        description="Hilbert curve sampling and ordering for exploratory landscape analysis.",
    )
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)
    common = _common_options()

    sample = commands.add_parser("sample", parents=[common], help="Draw a single sample")
    sample.add_argument(
        "--sampler", choices=[s.value for s in Sampler], default=Sampler.HILBERT.value
    )
    sample.add_argument("--dim", type=int, help="Dimension (default: first of --dims)")
    sample.add_argument("--n", type=int, help="Sample size (default: first mult * dim)")
    sample.add_argument("--function", type=int, help="Evaluate on this suite function id")
    sample.add_argument("--instance", type=int, default=1, help="Suite function instance")
    sample.add_argument("--run", type=int, default=0, help="Run index")

    order = commands.add_parser("order", parents=[common], help="Order a sample file")
    order.add_argument("input", type=Path, help="Sample CSV (x0..x{d-1}[,y])")
    order.add_argument(
        "--ordering",
        choices=[*(o.value for o in OrderingStrategy), KEEP_ORDER],
        default=OrderingStrategy.HILBERT.value,
    )
    order.add_argument("--run", type=int, default=0, help="Run index")

    features = commands.add_parser(
        "features", parents=[common], help="Information content features over the suite"
    )
    features.add_argument("--input", type=Path, help="Compute features for an (X, y) sample CSV instead")
    features.add_argument(
        "--keep-order", action="store_true", help="Treat --input rows as already ordered"
    )

    coverage = commands.add_parser(
        "coverage", parents=[common], help="Hausdorff coverage of the samplers"
    )
    coverage.add_argument(
        "--metric",
        dest="coverage_metric",
        choices=[v.value for v in HausdorffVariant],
        help="Reduce nearest-neighbour distances by their mean or their maximum",
    )
    coverage.add_argument(
        "--reference-mult",
        dest="reference_mult",
        type=int,
        help="Uniform reference sample size as a multiple of n",
    )

    timing = commands.add_parser("timing", parents=[common], help="Time sampling and ordering")
    timing.add_argument(
        "--mode", choices=[m.value for m in TimingMode], default=TimingMode.SAMPLING.value
    )

    classify = commands.add_parser(
        "classify", parents=[common], help="Predict function groups from a feature CSV"
    )
    classify.add_argument("--input", type=Path, help="Feature CSV (default: <out>/features.csv)")
    classify.add_argument(
        "--split",
        choices=[m.value for m in SplitMode],
        help="Hold out test instances, or a stratified random third per (sampler, ordering)",
    )
    return parser


def parse_args(args: t.Sequence[str]) -> tuple[argparse.Namespace, Request]:
    ns = create_parser().parse_args(args)
    request: Request
    if ns.command == "sample":
        request = SampleRequest(
            sampler=Sampler(ns.sampler),
            dimension=ns.dim,
            size=ns.n,
            function_id=ns.function,
            instance=ns.instance,
            run=ns.run,
        )
    elif ns.command == "order":
        ordering = None if ns.ordering == KEEP_ORDER else OrderingStrategy(ns.ordering)
        request = OrderRequest(input=ns.input, ordering=ordering, run=ns.run)
    elif ns.command == "features":
        request = FeaturesRequest(input=ns.input, keep_order=ns.keep_order)
    elif ns.command == "coverage":
        request = CoverageRequest()
    elif ns.command == "timing":
        request = TimingRequest(mode=TimingMode(ns.mode))
    else:
        request = ClassifyRequest(input=ns.input)
    return ns, request


def load_config(ns: argparse.Namespace) -> ExperimentConfig:
    """Read the config file, then apply command line overrides."""
    if ns.config is not None:
        config = parse_config_file(ns.config)
    elif Path(DEFAULT_CONFIG).is_file():
        config = parse_config_file(DEFAULT_CONFIG)
    else:
        config = ExperimentConfig()
    overrides = {
        option: getattr(ns, option)
        for option in (
            "dims",
            "mults",
            "reps",
            "seed",
            "samplers",
            "orderings",
            "stochasticity",
            "out",
            "workers",
        )
    }
    for option in ("coverage_metric", "reference_mult", "split"):
        overrides[option] = getattr(ns, option, None)
    return apply_overrides(config, overrides)


def run(output: Output, args: t.Sequence[str]) -> int:
    """Run CLI.

    This function do not call sys.exit(), but instead returns
    an integer indicating the code with which program should exit.

    All function output is written to the output argument.

    Arguments:
        output: the output to write to.
        args: command line arguments and options. Example: ["coverage", "--reps", "2"].

    Returns:
        exit_code: 0 indicates success, 2 that some sweep cells failed, anything else is an error.
    """
    try:
        ns, request = parse_args(args)
    except Exit as exc:
        if exc.return_code > 0:
            output.write_error(exc.msg)
        else:
            output.write(exc.msg)
        return exc.return_code
    configure_logging(output, ns.verbose)
    try:
        config = load_config(ns)
    except InvalidConfigError as exc:
        output.write_error(f"{PROG}: error: {exc.msg}")
        return 1
    except FileNotFoundError:
        output.write_error(f"{PROG}: error: config file not found: {ns.config}")
        return 1
    service = Service(config=config, output=output, executor=make_default_executor(config.workers))
    try:
        return service.execute(request)
    except ElaError as exc:
        output.write_error(f"{PROG}: error: {exc.msg}")
        return 1
    except FileNotFoundError as exc:
        output.write_error(f"{PROG}: error: file not found: {exc.filename}")
        return 1
    except OSError as exc:
        output.write_error(f"{PROG}: error: {exc.strerror}: {exc.filename}")
        return 1


def main() -> t.NoReturn:  # pragma: no cover
    """Command line entry point."""
    sys.excepthook = custom_except_hook
    sys.exit(run(make_default_output(), sys.argv[1:]))


# Keep a reference to the default except hook
_default_except_hook = sys.excepthook


def custom_except_hook(
    exception_type: type[BaseException],
    exception: BaseException,
    traceback: TracebackType | None,
) -> None:
    # Suppress traceback display on KeyboardInterrupt
    if exception_type is KeyboardInterrupt:
        return
    _default_except_hook(exception_type, exception, traceback)
