"""Error hierarchy shared by the library, the CLI and the HTTP service.

Every error carries a machine-readable ``category`` and the process exit code
the CLI uses for it.
"""

from __future__ import annotations

from typing import Optional


class ScbicmError(Exception):
    category = "internal"
    exit_code = 1

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class InvalidParametersError(ScbicmError, ValueError):
    category = "invalid-input"
    exit_code = 2


class ConstraintViolationError(ScbicmError, ValueError):
    """A connection or ensemble breaks one of the numbered design constraints."""

    category = "constraint"
    exit_code = 3

    def __init__(self, constraint: Optional[int], message: str) -> None:
        prefix = f"constraint {constraint}: " if constraint is not None else ""
        super().__init__(prefix + message)
        self.constraint = constraint


class BudgetMismatchError(ConstraintViolationError):
    """Spare terminal sockets and demanded connection edges do not match."""


class ChannelRangeError(ScbicmError, ValueError):
    category = "range"
    exit_code = 4


class LiftingError(ScbicmError):
    category = "lifting"
    exit_code = 5


class ArtifactError(ScbicmError):
    category = "artifact"
    exit_code = 6
