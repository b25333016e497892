"""Experiment configuration.

A config file is a flat list of `key = value` entries parsed with the
lark grammar in data/config.lark:

    # simulation protocol
    class1 = harmonic(phi = pi/16)
    class2 = harmonic(phi = pi/4)
    kernel = gaussian
    bandwidth_grid = [0.1, 1, 10]
    phi_pairs = [[pi/16, pi/8], [pi/16, pi/4]]

Values are numbers (with + - * / and the constant pi), quoted strings,
bare words, lists and intensity calls.  Every key is optional; unknown
keys are rejected.  Defaults reproduce the simulation protocol: Gaussian
kernel, ten log-spaced bandwidths on [0.1, 10], 5 folds, 10^4 test
trains, 10 runs, phases pi/16 and pi/4.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
from lark import Lark, Transformer, Tree
from lark.exceptions import UnexpectedInput, VisitError

from spikebayes.errors import ConfigError
from spikebayes.intensity import GaussianBump, Harmonic, Homogeneous, IntensityModel, Scaled
from spikebayes.io import read_tabulated_intensity
from spikebayes.kernel import KernelFamily
from spikebayes.simulate import check_priors

logger = logging.getLogger(__name__)

# Excluded from the config hash: they never change results.
_UNHASHED = ("threads", "out_dir")


@dataclass(frozen=True)
class Word:
    """A bare word value such as `gaussian`."""
    name: str


@dataclass(frozen=True)
class Call:
    """A call value such as `harmonic(phi = pi/16)`."""
    name: str
    kwargs: dict[str, Any]


# --- Grammar ---

_PARSER: Lark | None = None


def _parser() -> Lark:
    global _PARSER
    if _PARSER is None:
        grammar = resources.files("spikebayes").joinpath("data/config.lark").read_text("utf-8")
        _PARSER = Lark(grammar, parser="lalr", maybe_placeholders=False)
    return _PARSER


class _ValueTransformer(Transformer):
    """Turns a value subtree into Python values."""

    def number(self, items):
        text = str(items[0])
        if any(c in text for c in ".eE"):
            return float(text)
        return int(text)

    def word(self, items):
        name = str(items[0])
        if name == "pi":
            return math.pi
        return Word(name)

    def string(self, items):
        return str(items[0])[1:-1].replace('\\"', '"').replace("\\\\", "\\")

    def list(self, items):
        return list(items)

    def kwarg(self, items):
        return str(items[0]), items[1]

    def call(self, items):
        name = str(items[0])
        kwargs = {}
        for key, value in items[1:]:
            if key in kwargs:
                raise ValueError(f"argument '{key}' given twice to {name}()")
            kwargs[key] = value
        return Call(name, kwargs)

    @staticmethod
    def _numbers(op: str, items) -> tuple[float, ...]:
        for item in items:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ValueError(f"operator '{op}' needs numbers, got {item!r}")
        return tuple(items)

    def add(self, items):
        a, b = self._numbers("+", items)
        return a + b

    def sub(self, items):
        a, b = self._numbers("-", items)
        return a - b

    def mul(self, items):
        a, b = self._numbers("*", items)
        return a * b

    def div(self, items):
        a, b = self._numbers("/", items)
        if b == 0:
            raise ValueError("division by zero")
        return a / b

    def neg(self, items):
        (a,) = self._numbers("-", items)
        return -a


def _transform_value(key: str, node: Tree) -> Any:
    try:
        return _ValueTransformer().transform(node)
    except VisitError as exc:
        raise ConfigError(key, str(exc.orig_exc)) from exc


def parse_config(text: str) -> dict[str, Any]:
    """Parse config text into {key: raw value}.

    Raises:
        ConfigError: Syntax errors (field "<syntax>") and repeated keys.
    """
    try:
        tree = _parser().parse(text)
    except UnexpectedInput as exc:
        raise ConfigError("<syntax>", f"line {exc.line}, column {exc.column}: unexpected input") from exc
    values: dict[str, Any] = {}
    for entry in tree.children:
        key = str(entry.children[0])
        if key in values:
            raise ConfigError(key, "given twice")
        values[key] = _transform_value(key, entry.children[1])
    return values


# --- Coercion ---

def _number(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    return float(value)


def _positive(key: str, value: Any) -> float:
    x = _number(key, value)
    if not x > 0:
        raise ConfigError(key, f"must be > 0, got {x!r}")
    return x


def _count(key: str, value: Any, minimum: int = 1) -> int:
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {value}")
    return value


def _nonempty_list(key: str, value: Any) -> list:
    if not isinstance(value, list):
        raise ConfigError(key, f"expected a list, got {value!r}")
    if not value:
        raise ConfigError(key, "must not be empty")
    return value


def _positive_grid(key: str, value: Any) -> tuple[float, ...]:
    return tuple(_positive(key, v) for v in _nonempty_list(key, value))


def _count_grid(key: str, value: Any) -> tuple[int, ...]:
    return tuple(_count(key, v) for v in _nonempty_list(key, value))


def _pairs(key: str, value: Any) -> tuple[tuple[float, float], ...]:
    out = []
    for item in _nonempty_list(key, value):
        if not isinstance(item, list) or len(item) != 2:
            raise ConfigError(key, f"expected pairs [a, b], got {item!r}")
        out.append((_number(key, item[0]), _number(key, item[1])))
    return tuple(out)


def _text(key: str, value: Any) -> str:
    if isinstance(value, Word):
        return value.name
    if isinstance(value, str):
        return value
    raise ConfigError(key, f"expected a string, got {value!r}")


def _kernel(key: str, value: Any) -> KernelFamily:
    name = _text(key, value).lower()
    try:
        return KernelFamily(name)
    except ValueError:
        choices = ", ".join(f.value for f in KernelFamily)
        raise ConfigError(key, f"unknown kernel '{name}' (expected one of: {choices})") from None


_INTENSITY_ARGS = {
    "homogeneous": ("rate",),
    "harmonic": ("phi",),
    "gaussian_bump": ("amplitude", "width"),
    "scaled": ("base", "factor"),
    "tabulated": ("path",),
}


def build_intensity(key: str, value: Any, base_dir: Path = Path(".")) -> IntensityModel:
    """Intensity model from a call value such as `scaled(base=homogeneous(rate=2), factor=4)`."""
    if not isinstance(value, Call):
        raise ConfigError(key, f"expected an intensity such as harmonic(phi=pi/16), got {value!r}")
    expected = _INTENSITY_ARGS.get(value.name)
    if expected is None:
        raise ConfigError(key, f"unknown intensity '{value.name}' "
                               f"(expected one of: {', '.join(_INTENSITY_ARGS)})")
    if set(value.kwargs) != set(expected):
        raise ConfigError(key, f"{value.name}() takes arguments ({', '.join(expected)}), "
                               f"got ({', '.join(value.kwargs)})")
    args = value.kwargs
    try:
        if value.name == "homogeneous":
            return Homogeneous(_number(key, args["rate"]))
        if value.name == "harmonic":
            return Harmonic(_number(key, args["phi"]))
        if value.name == "gaussian_bump":
            return GaussianBump(_number(key, args["amplitude"]), _number(key, args["width"]))
        if value.name == "scaled":
            return Scaled(build_intensity(key, args["base"], base_dir), _number(key, args["factor"]))
        path = Path(_text(key, args["path"]))
        if not path.is_absolute():
            path = base_dir / path
        return read_tabulated_intensity(path)
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(key, str(exc)) from exc


# --- Config ---

def _default_bandwidths() -> tuple[float, ...]:
    return tuple(float(h) for h in np.logspace(-1, 1, 10))


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment configuration."""
    class1: IntensityModel = Harmonic(math.pi / 16)
    class2: IntensityModel = Harmonic(math.pi / 4)
    priors: tuple[float, float] = (0.5, 0.5)
    T: float = 10.0
    T_grid: tuple[float, ...] = tuple(float(t) for t in range(1, 21))
    L: int = 200
    L_grid: tuple[int, ...] = (10, 20, 50, 100, 200)
    kernel: KernelFamily = KernelFamily.GAUSSIAN
    bandwidth_grid: tuple[float, ...] = field(default_factory=_default_bandwidths)
    folds: int = 5
    n_test: int = 10_000
    runs: int = 10
    seed: int = 1
    out_dir: str = "results"
    phi_pairs: tuple[tuple[float, float], ...] = (
        (math.pi / 16, math.pi / 8),
        (math.pi / 16, math.pi / 4),
        (math.pi / 16, math.pi),
    )
    failure_pair: tuple[IntensityModel, IntensityModel] = (
        GaussianBump(300.0, 20.0),
        GaussianBump(600.0, 40.0),
    )
    failure_T_grid: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
    replicates: int = 10_000
    epsilons: tuple[float, ...] = (0.05, 0.1)
    threads: int = 1
    bandwidth_L_grid: tuple[int, ...] = (20, 50, 100, 200)

    def canonical(self) -> str:
        """Stable text rendering of every result-relevant field."""
        lines = []
        for f in dataclasses.fields(self):
            if f.name in _UNHASHED:
                continue
            value = getattr(self, f.name)
            if isinstance(value, KernelFamily):
                value = value.value
            lines.append(f"{f.name} = {value!r}")
        return "\n".join(lines)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()[:12]


KNOWN_KEYS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def _coerce(key: str, value: Any, base_dir: Path) -> Any:
    if key in ("class1", "class2"):
        return build_intensity(key, value, base_dir)
    if key == "priors":
        items = _nonempty_list(key, value)
        if len(items) != 2:
            raise ConfigError(key, f"expected [pi1, pi2], got {value!r}")
        try:
            return check_priors([_number(key, v) for v in items])
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from exc
    if key == "T":
        return _positive(key, value)
    if key in ("T_grid", "failure_T_grid", "epsilons"):
        return _positive_grid(key, value)
    if key == "bandwidth_grid":
        return tuple(sorted(_positive_grid(key, value)))
    if key in ("L_grid", "bandwidth_L_grid"):
        return _count_grid(key, value)
    if key == "L":
        return _count(key, value)
    if key == "folds":
        return _count(key, value, minimum=2)
    if key in ("n_test", "runs", "replicates", "threads"):
        return _count(key, value)
    if key == "seed":
        return _count(key, value, minimum=0)
    if key == "kernel":
        return _kernel(key, value)
    if key == "out_dir":
        return _text(key, value)
    if key == "phi_pairs":
        return _pairs(key, value)
    if key == "failure_pair":
        items = _nonempty_list(key, value)
        if len(items) != 2:
            raise ConfigError(key, f"expected two intensities, got {len(items)}")
        return tuple(build_intensity(key, v, base_dir) for v in items)
    raise ConfigError(key, f"unknown key (expected one of: {', '.join(KNOWN_KEYS)})")


def build_config(values: dict[str, Any], base: ExperimentConfig | None = None,
                 base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate raw values and apply them on top of `base` (defaults when None)."""
    base = base or ExperimentConfig()
    resolved = {key: _coerce(key, value, base_dir) for key, value in values.items()}
    return dataclasses.replace(base, **resolved)


def default_config_text() -> str:
    """The packaged data/default.cfg, a commented template of every default."""
    return resources.files("spikebayes").joinpath("data/default.cfg").read_text("utf-8")


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Read a config file; None gives the default configuration."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror or exc}") from exc
    config = build_config(parse_config(text), base_dir=path.parent)
    logger.info("loaded config %s (hash %s)", path, config.config_hash)
    return config


def apply_overrides(config: ExperimentConfig, assignments: list[str],
                    base_dir: Path = Path(".")) -> ExperimentConfig:
    """Apply `key=value` strings, each parsed with the config grammar."""
    values: dict[str, Any] = {}
    for assignment in assignments:
        key, sep, raw = assignment.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(assignment, "override must look like key=value")
        values.update(parse_config(f"{key} = {raw}"))
    return build_config(values, config, base_dir)
