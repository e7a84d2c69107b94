"""Exception types shared across the simulator."""

from __future__ import annotations


class SranError(Exception):
    """Base class for all simulator errors."""


class RangeError(SranError):
    """A single configuration field outside its allowed range."""

    def __init__(self, field: str, value, allowed: str):
        self.field = field
        self.value = value
        self.allowed = allowed
        super().__init__(f"{field}={value!r} (allowed: {allowed})")


class ConfigError(SranError):
    """Aggregate of every range violation found while validating a config."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        msg = "; ".join(str(v) for v in self.violations) or "invalid configuration"
        super().__init__(msg)


class DomainError(SranError):
    """An argument outside the mathematical domain of an operation."""


class StateError(SranError):
    """A protocol operation invoked in the wrong session state."""


class ConvergenceError(SranError):
    """An iterative solver failed to reach its tolerance within its budget."""


class SizeError(SranError):
    """An instance exceeds the guard limits of an exhaustive routine."""


class ConservationError(SranError):
    """A base station's allocated bandwidth exceeds its budget."""
