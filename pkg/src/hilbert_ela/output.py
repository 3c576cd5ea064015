from __future__ import annotations

import io
import logging
import sys
import typing as t
from dataclasses import dataclass

LOGGER_NAME = "hilbert_ela"
LOG_FORMAT = "hilbert-ela: %(levelname)s: %(message)s"


@dataclass
class Output:
    stdout: t.TextIO
    stderr: t.TextIO

    def write(self, content: str) -> None:
        print(content, file=self.stdout)

    def write_error(self, content: str) -> None:
        print(content, file=self.stderr)


def make_default_output() -> Output:
    return Output(stdout=sys.stdout, stderr=sys.stderr)


def make_capture_output() -> tuple[io.StringIO, io.StringIO, Output]:
    stdout = io.StringIO()
    stderr = io.StringIO()
    return stdout, stderr, Output(stdout, stderr)


class _OutputHandler(logging.StreamHandler):  # type: ignore[type-arg]
    """Stream handler writing to the stderr of an Output."""


def verbosity_level(verbosity: int) -> int:
    if verbosity <= 0:
        return logging.WARNING
    if verbosity == 1:
        return logging.INFO
    return logging.DEBUG


def configure_logging(output: Output, verbosity: int = 0) -> logging.Handler:
    """Route package log records to ``output.stderr``, replacing a previous CLI handler."""
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        if isinstance(handler, _OutputHandler):
            logger.removeHandler(handler)
    handler = _OutputHandler(output.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(verbosity_level(verbosity))
    return handler
