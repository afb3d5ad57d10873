class DiscoError(Exception):
    """Base class for all errors raised by this package."""


class SizeError(DiscoError, ValueError):
    """Array shapes are incompatible (kernel larger than signal, mismatched grids)."""


class DomainError(DiscoError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class ConfigurationError(DiscoError, ValueError):
    """Objects that must agree (scale sets, channels) do not."""


class ExistenceError(DomainError):
    """No exact solution exists for the requested constraint."""


class FormatError(DiscoError, ValueError):
    """A basis or report file is unreadable or inconsistent."""


class NumericalError(DiscoError, ArithmeticError):
    """A linear system is too ill-conditioned to solve reliably."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition
