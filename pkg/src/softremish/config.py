"""Flat ``key=value`` configuration files and the benchmark settings they feed.

Resolution order is built-in defaults, then the config file, then command-line
flags.  The effective settings can be written back out with
:func:`dump_config`, and that file reproduces the run when passed to
``--config``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .activations import BENCHMARK_SWEEP, ActivationKind
from .errors import ConfigError
from .optim import OptimizerConfig
from .trainer import TrainConfig


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "1", "yes", "on"):
        return True
    if value in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _optional_int(text: str) -> Optional[int]:
    text = text.strip()
    return None if text.lower() in ("", "none") else int(text)


def _optional_str(text: str) -> Optional[str]:
    text = text.strip()
    return None if text.lower() in ("", "none") else text


def _finite(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def _name_list(text: str) -> list[str]:
    names = [n.strip().lower() for n in text.split(",") if n.strip()]
    if not names:
        raise ValueError("empty activation list")
    return names


def _range(text: str) -> tuple[float, float]:
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError(f"expected two numbers, got {text!r}")
    return _finite(parts[0]), _finite(parts[1])


# key -> (parser, default)
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "activation": (_name_list, [k.name for k in BENCHMARK_SWEEP]),
    "alpha": (_finite, 2.0),
    "epochs": (int, 10),
    "batch": (int, 128),
    "seed": (int, 0),
    "repeats": (int, 1),
    "lr": (_finite, 1e-3),
    "optimizer": (str, "adam"),
    "beta1": (_finite, 0.9),
    "beta2": (_finite, 0.999),
    "epsilon": (_finite, 1e-7),
    "precision": (str, "single"),
    "data_dir": (_optional_str, None),
    "synthetic": (_optional_int, None),
    "data_seed": (int, 42),
    "sweep_dense": (_bool, True),
    "deterministic": (_bool, True),
    "out": (str, "results"),
    "order": (_optional_int, None),
    "range": (_range, (-5.0, 5.0)),
    "samples": (int, 1001),
}


def defaults() -> dict[str, Any]:
    return {k: (list(v) if isinstance(v, list) else v) for k, (_, v) in SCHEMA.items()}


def parse_config_text(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        try:
            values[key] = SCHEMA[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    return values


def read_config_file(path) -> dict[str, Any]:
    """Only the keys present in the file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config_text(text)


def load_config(path) -> dict[str, Any]:
    """Settings from a ``key=value`` file merged over the defaults."""
    settings = defaults()
    settings.update(read_config_file(path))
    return settings


def _fmt(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        sep = "," if all(isinstance(v, str) for v in value) else " "
        return sep.join(_fmt(v) for v in value)
    return str(value)


def dump_config(settings: dict[str, Any]) -> str:
    return "".join(f"{k}={_fmt(settings[k])}\n" for k in SCHEMA if k in settings)


@dataclass(frozen=True)
class BenchmarkConfig:
    activations: tuple[ActivationKind, ...]
    repeats: int
    base: TrainConfig
    out: Path = field(default_factory=lambda: Path("results"))

    def __post_init__(self):
        if not self.activations:
            raise ConfigError("the activation sweep list is empty")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")


def activations_from(settings: dict[str, Any]) -> tuple[ActivationKind, ...]:
    try:
        return tuple(ActivationKind.parse(n, settings["alpha"]) for n in settings["activation"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def train_config_from(settings: dict[str, Any], activation: Optional[ActivationKind] = None) -> TrainConfig:
    if activation is None:
        activation = activations_from(settings)[0]
    try:
        opt = OptimizerConfig(
            kind=settings["optimizer"],
            learning_rate=settings["lr"],
            beta1=settings["beta1"],
            beta2=settings["beta2"],
            epsilon=settings["epsilon"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return TrainConfig(
        activation=activation,
        sweep_dense=settings["sweep_dense"],
        epochs=settings["epochs"],
        batch_size=settings["batch"],
        seed=settings["seed"],
        optimizer=opt,
        precision=settings["precision"],
        data_dir=settings["data_dir"],
        synthetic=settings["synthetic"],
        data_seed=settings["data_seed"],
        deterministic=settings["deterministic"],
    )


def benchmark_config_from(settings: dict[str, Any]) -> BenchmarkConfig:
    return BenchmarkConfig(
        activations=activations_from(settings),
        repeats=settings["repeats"],
        base=train_config_from(settings),
        out=Path(settings["out"]),
    )
