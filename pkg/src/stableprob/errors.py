"""Exception types shared across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """Raised when an instance, matching, or model fails structural checks."""


class ResourceLimitError(RuntimeError):
    """Raised when a computation would exceed its configured expansion cap."""
