"""Cooperative edge caching: LA-assisted Q-learning and baselines."""

from ._core import (
    ConfigError,
    DomainError,
    IoError,
    ParseError,
    TooLargeError,
    TrainingDivergedError,
    default_config,
    la_bench,
    mos,
    ops_budget,
    optimal,
    page_delay,
    run,
    sum_mos,
)

__version__ = "0.1.0"
