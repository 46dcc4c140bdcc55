"""Exception hierarchy shared across the package.

Every error raised by the library derives from :class:`BeamError` so callers
(CLI, HTTP service) can map failure categories to exit codes / status codes
without string matching.
"""

from __future__ import annotations

__all__ = [
    "BeamError",
    "SpaceError",
    "OffGridError",
    "ConstraintError",
    "ValidationError",
    "StateError",
    "BudgetExhausted",
    "VersionConflict",
    "StorageError",
]


class BeamError(Exception):
    """Base class for all library errors."""


class SpaceError(BeamError):
    """Invalid axis or space definition."""


class OffGridError(SpaceError):
    """A value does not land on the discrete grid of its axis."""


class ConstraintError(BeamError):
    """Constraint definition references an unknown axis or is malformed."""


class ValidationError(BeamError):
    """Input data (rows, files, requests) failed validation."""


class StateError(BeamError):
    """Operation not legal in the campaign's current state."""


class BudgetExhausted(StateError):
    """No experiment budget remains."""


class VersionConflict(StateError):
    """Optimistic-concurrency token does not match the stored state."""


class StorageError(BeamError):
    """Campaign file missing, unreadable, or structurally invalid."""
