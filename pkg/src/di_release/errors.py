"""Exceptions raised by the release mechanism, its data pipeline, and its harness.

All exceptions derive from `ReleaseError`, so that the command-line interface and the
`.Executor` can catch them and turn them into messages and exit codes.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from di_release.harness.training import TrainHistory


class ReleaseError(RuntimeError):
    """Exceptions that are caught by the command-line interface and printed instead."""

    exit_code: int = 1


class ContractViolationError(ReleaseError, ValueError):
    """Shapes or preconditions of an operation are not satisfied."""


class DomainError(ReleaseError, ValueError):
    """A numeric operation left its domain, for instance a non-finite result."""


class ConfigError(ReleaseError):
    exit_code = 2


class DataError(ReleaseError):
    exit_code = 3


class DivergenceError(ReleaseError):
    """Training produced a non-finite loss.

    The history recorded up to the failing iteration is attached, so that it can be
    written to disk before aborting.
    """

    exit_code = 4

    def __init__(self, message: str, history: TrainHistory | None = None) -> None:
        super().__init__(message)
        self.history = history
