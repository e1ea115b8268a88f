"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes, so every error raised from
library code should derive from :class:`AnyonJJError`.
"""

from __future__ import annotations


class AnyonJJError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(AnyonJJError, ValueError):
    """Invalid run configuration or domain-object parameters."""

    exit_code = 2

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class CapacityError(AnyonJJError):
    """Requested Hilbert space exceeds the configured dimension cap."""

    exit_code = 4


class NotInBasisError(AnyonJJError, KeyError):
    """Occupation vector is not a member of the basis."""

    exit_code = 1

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class DimensionMismatchError(AnyonJJError, ValueError):
    exit_code = 1


class NumericalError(AnyonJJError):
    """Base for failures of a numerical routine."""

    exit_code = 3


class HermiticityError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


class StepSizeError(NumericalError):
    pass


class SingularityError(NumericalError):
    """Mean-field flow evaluated at or beyond |z| = 1."""
