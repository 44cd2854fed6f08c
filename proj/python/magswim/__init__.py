"""Magneto-elastic sheet swimmers in Stokes flow."""

from typing import Mapping, Union

from ._core import (
    ConfigError,
    IoError,
    ModelError,
    __version__,
    build_swimmer,
    characteristic_length,
    nondim_numbers,
    nondim_to_physical,
    sphere_drag_ratio,
    stokeslet,
)
from . import _core

Config = Union[str, Mapping[str, object]]


def _text(config: Config) -> str:
    if isinstance(config, str):
        return config
    lines = []
    for key, value in config.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def simulate(config: Config) -> dict:
    """Runs one simulation. `config` is config-file text or a dotted-key mapping."""
    return _core.simulate(_text(config))


def sweep(config: Config, workers: int = 1) -> str:
    """Runs a two-axis sweep and returns the CSV text."""
    return _core.sweep(_text(config), workers)


def validate() -> list:
    return _core.validate()


def config_hash(config: Config) -> str:
    return _core.config_hash(_text(config))


__all__ = [
    "ConfigError",
    "IoError",
    "ModelError",
    "__version__",
    "build_swimmer",
    "characteristic_length",
    "config_hash",
    "nondim_numbers",
    "nondim_to_physical",
    "simulate",
    "sphere_drag_ratio",
    "stokeslet",
    "sweep",
    "validate",
]
