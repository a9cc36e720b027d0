"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
DecompositionError / ChainAbortError -> 4.
"""

from __future__ import annotations

__all__ = [
    "ConfigError",
    "DataError",
    "DecompositionError",
    "ChainAbortError",
    "DegenerateVarianceError",
]


class ConfigError(ValueError):
    """Invalid or contradictory run configuration."""


class DataError(ValueError):
    """Unreadable or malformed data/operator files."""


class DecompositionError(RuntimeError):
    """A linear solve or factorization failed (non-SPD system)."""


class ChainAbortError(RuntimeError):
    """A chain hit an unrecoverable numerical failure mid-run.

    Carries the iteration index and a plain-dict snapshot of the state so
    callers can dump it for post-mortem inspection.
    """

    def __init__(self, message: str, iteration: int, state_dump: dict):
        super().__init__(message)
        self.iteration = iteration
        self.state_dump = state_dump


class DegenerateVarianceError(ValueError):
    """A diagnostic was asked to analyze a constant (zero-variance) chain."""
