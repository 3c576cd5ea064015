from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import re
import typing as t
from dataclasses import dataclass
from pathlib import Path

from .classify import SplitMode
from .coverage import HausdorffVariant
from .errors import ElaError
from .ordering import OrderingStrategy
from .sampling import Sampler, Stochasticity, StochasticityStrategy

try:
    import tomllib
except ImportError:
    import tomli as tomllib

# Regular expression to find location in tomllib.TOMLDecodeError
# Example: "(at line 12, column 41)" => (12, 41,)
LOCATION_PATTERN = re.compile(r"\(at line (\d+), column (\d+)\)")

TOOL_SECTION = "hilbert-ela"
EXPERIMENT_SECTION = "experiment"


class InvalidConfigError(ElaError):
    """Error raised when an experiment configuration cannot be used."""


class TOMLDecodeError(InvalidConfigError):
    """Error raised when failing to decode a TOML file."""

    def __init__(self, origin: Exception, content: str, filename: str | None) -> None:
        self.filename = filename
        # Do not capitalize error message
        error_message: str = origin.args[0]
        self.reason = error_message[0].lower() + error_message[1:]
        match = LOCATION_PATTERN.search(self.reason)
        if match:
            last_line: str | int = match.group(1)
            last_column: str | int = match.group(2)
        else:
            all_lines = content.splitlines()
            last_line = len(all_lines)
            last_column = 0 if not all_lines else len(all_lines[-1]) + 1
        self.location = f"{last_line}:{last_column}"
        if filename:
            msg = f"{self.filename}:{self.location}: {self.reason}"
        else:
            msg = self.reason
        super().__init__(msg)


class InvalidOptionError(InvalidConfigError):
    """Error raised when failing to parse a single option."""

    def __init__(self, option: str, msg: str) -> None:
        self.name = option
        self.reason = msg
        super().__init__(f"option '{option}': {self.reason}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment settings. Sample sizes are ``mult * d`` for every pair."""

    dims: tuple[int, ...] = (5,)
    mults: tuple[int, ...] = (100,)
    reps: int = 30
    seed: int = 2024
    samplers: tuple[Sampler, ...] = (Sampler.HILBERT, Sampler.LHS, Sampler.RANDOM_WALK)
    orderings: tuple[OrderingStrategy, ...] = (
        OrderingStrategy.HILBERT,
        OrderingStrategy.NEAREST_NEIGHBOUR,
        OrderingStrategy.RANDOM,
    )
    out: str = "results"
    instances: tuple[int, ...] = (1, 2, 3, 4, 5)
    test_instances: tuple[int, ...] = (4, 5)
    k: int = 5
    importance_reps: int = 10
    workers: int = 1
    stochasticity: Stochasticity = Stochasticity.VERTEX_GAUSSIAN
    sigma: float = 0.3
    settling_threshold: float = 0.05
    ratio: float = 0.5
    control: bool = True
    coverage_metric: HausdorffVariant = HausdorffVariant.AVERAGED
    reference_mult: int = 10
    split: SplitMode = SplitMode.INSTANCES

    @property
    def output_dir(self) -> Path:
        return Path(self.out)

    @property
    def strategy(self) -> StochasticityStrategy:
        return StochasticityStrategy(self.stochasticity, self.sigma)

    def sizes(self) -> list[tuple[int, int]]:
        """Every (dimension, sample size) pair, in config order."""
        return [(d, mult * d) for d in self.dims for mult in self.mults]

    def as_dict(self) -> dict[str, t.Any]:
        values: dict[str, t.Any] = {}
        for option in OPTIONS:
            value = getattr(self, option)
            if isinstance(value, tuple):
                value = [v.value if isinstance(v, enum.Enum) else v for v in value]  # pyright: ignore[reportUnknownVariableType]
            elif isinstance(value, enum.Enum):
                value = value.value
            values[option] = value
        return values


def config_hash(config: ExperimentConfig) -> str:
    """Short digest of every option that can change results (``out`` and ``workers`` excluded)."""
    values = config.as_dict()
    del values["out"]
    del values["workers"]
    canonical = json.dumps(values, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def parse_config_file(config_file: str | Path) -> ExperimentConfig:
    """Read config from a file."""
    filepath = Path(config_file)
    content = filepath.read_text()
    return parse_config_content(content=content, filename=filepath.as_posix())


def parse_config_content(content: str, filename: str | None = None) -> ExperimentConfig:
    """Read config from a string."""
    try:
        document = tomllib.loads(content)
    except tomllib.TOMLDecodeError as exc:
        raise TOMLDecodeError(exc, content, filename)
    return parse_config_document(document)


def parse_config_document(document: dict[str, t.Any]) -> ExperimentConfig:
    """Read config from a dict: an ``[experiment]`` table or ``[tool.hilbert-ela]``."""
    if EXPERIMENT_SECTION in document:
        section = document[EXPERIMENT_SECTION]
    else:
        section = document.get("tool", {}).get(TOOL_SECTION, {})
    if not isinstance(section, dict):
        raise InvalidConfigError(
            f"wrong type '{type(section).__name__}': experiment settings must be a table."
        )
    return apply_overrides(ExperimentConfig(), t.cast(dict[str, t.Any], section))


def apply_overrides(config: ExperimentConfig, values: t.Mapping[str, t.Any]) -> ExperimentConfig:
    """Return a copy of config with options replaced by ``values`` (None values are ignored)."""
    changes: dict[str, t.Any] = {}
    for option, raw in values.items():
        if raw is None:
            continue
        if option not in OPTIONS:
            raise InvalidOptionError(
                option, f"unknown option: valid options are {sorted(OPTIONS)}."
            )
        changes[option] = OPTIONS[option](option, raw)
    resolved = dataclasses.replace(config, **changes)
    _check_instances(resolved)
    return resolved


def _check_instances(config: ExperimentConfig) -> None:
    unknown = set(config.test_instances) - set(config.instances)
    if unknown:
        raise InvalidOptionError(
            "test_instances", f"instances {sorted(unknown)} are not listed in 'instances'."
        )
    if set(config.test_instances) == set(config.instances):
        raise InvalidOptionError(
            "test_instances", "at least one instance must remain for training."
        )


## Option parsers


def _wrong_type(option: str, value: t.Any, expected: str) -> InvalidOptionError:
    return InvalidOptionError(
        option, f"wrong type '{type(value).__name__}': {option} must be {expected}."
    )


def _is_int(value: t.Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _int(option: str, value: t.Any) -> int:
    if not _is_int(value):
        raise _wrong_type(option, value, "an integer")
    return int(value)


def _non_negative_int(option: str, value: t.Any) -> int:
    number = _int(option, value)
    if number < 0:
        raise InvalidOptionError(option, f"must not be negative, got {number}.")
    return number


def _positive_int(option: str, value: t.Any) -> int:
    number = _int(option, value)
    if number < 1:
        raise InvalidOptionError(option, f"must be at least 1, got {number}.")
    return number


def _non_empty_list(option: str, value: t.Any) -> list[t.Any]:
    if not isinstance(value, (list, tuple)):
        raise _wrong_type(option, value, "a list")
    items = list(t.cast(t.Sequence[t.Any], value))
    if not items:
        raise InvalidOptionError(option, "must not be empty.")
    return items


def _int_tuple(minimum: int) -> t.Callable[[str, t.Any], tuple[int, ...]]:
    def parse(option: str, value: t.Any) -> tuple[int, ...]:
        items = _non_empty_list(option, value)
        for item in items:
            if not _is_int(item):
                raise _wrong_type(option, item, "a list of integers")
            if item < minimum:
                raise InvalidOptionError(option, f"values must be at least {minimum}, got {item}.")
        return tuple(dict.fromkeys(int(item) for item in items))

    return parse


_E = t.TypeVar("_E", bound=enum.Enum)


def _choice(option: str, value: t.Any, kind: type[_E]) -> _E:
    if isinstance(value, kind):
        return value
    if not isinstance(value, str):
        raise _wrong_type(option, value, "a string")
    try:
        return kind(value)
    except ValueError:
        choices = [member.value for member in kind]
        raise InvalidOptionError(option, f"unknown value '{value}': choose from {choices}.")


def _enum_tuple(kind: type[_E]) -> t.Callable[[str, t.Any], tuple[_E, ...]]:
    def parse(option: str, value: t.Any) -> tuple[_E, ...]:
        items = _non_empty_list(option, value)
        return tuple(dict.fromkeys(_choice(option, item, kind) for item in items))

    return parse


def _enum_value(kind: type[_E]) -> t.Callable[[str, t.Any], _E]:
    def parse(option: str, value: t.Any) -> _E:
        return _choice(option, value, kind)

    return parse


def _float(option: str, value: t.Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _wrong_type(option, value, "a number")
    return float(value)


def _positive_float(option: str, value: t.Any) -> float:
    number = _float(option, value)
    if not number > 0:
        raise InvalidOptionError(option, f"must be positive, got {number}.")
    return number


def _unit_interval(option: str, value: t.Any) -> float:
    number = _float(option, value)
    if not 0 < number < 1:
        raise InvalidOptionError(option, f"must lie in (0, 1), got {number}.")
    return number


def _str(option: str, value: t.Any) -> str:
    if not isinstance(value, str) or not value:
        raise _wrong_type(option, value, "a non-empty string")
    return value


def _bool(option: str, value: t.Any) -> bool:
    if not isinstance(value, bool):
        raise _wrong_type(option, value, "a boolean")
    return value


OPTIONS: dict[str, t.Callable[[str, t.Any], t.Any]] = {
    "dims": _int_tuple(minimum=1),
    "mults": _int_tuple(minimum=1),
    "reps": _positive_int,
    "seed": _non_negative_int,
    "samplers": _enum_tuple(Sampler),
    "orderings": _enum_tuple(OrderingStrategy),
    "out": _str,
    "instances": _int_tuple(minimum=0),
    "test_instances": _int_tuple(minimum=0),
    "k": _positive_int,
    "importance_reps": _positive_int,
    "workers": _positive_int,
    "stochasticity": _enum_value(Stochasticity),
    "sigma": _positive_float,
    "settling_threshold": _unit_interval,
    "ratio": _unit_interval,
    "control": _bool,
    "coverage_metric": _enum_value(HausdorffVariant),
    "reference_mult": _positive_int,
    "split": _enum_value(SplitMode),
}
