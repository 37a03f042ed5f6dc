"""Adversarial non-linear ICA."""

from ._advica import (
    ConfigError,
    IngestionError,
    NumericalError,
    build_task,
    config_keys,
    fastica,
    format_score,
    gen_synthetic,
    max_correlation,
    train,
)

__all__ = [
    "ConfigError",
    "IngestionError",
    "NumericalError",
    "build_task",
    "config_keys",
    "fastica",
    "format_score",
    "gen_synthetic",
    "max_correlation",
    "train",
]
