"""Exception hierarchy.

The CLI maps :class:`ValidationError` (and its subclass
:class:`DimensionError`) to exit code 2 and :class:`ToleranceError` to
exit code 3.
"""


class GceError(Exception):
    """Base class for all package errors."""

    module = "gce_metrology"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module


class ValidationError(GceError, ValueError):
    """Input violates a documented invariant."""


class DimensionError(ValidationError):
    """Operator/channel dimensions do not line up."""


class ToleranceError(GceError, ArithmeticError):
    """A numerical check exceeded its tolerance."""
