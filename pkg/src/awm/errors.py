"""Exception types raised across the package."""


class AWMError(Exception):
    """Base class for package errors."""


class DomainError(AWMError, ValueError):
    """Parameters outside the region where an operation is defined."""


class InputError(AWMError, ValueError):
    """Malformed array or curve input (non-monotone grid, shape mismatch, ...)."""


class UnsupportedError(AWMError, ValueError):
    """Input is valid but the requested representation cannot express it."""


class DegenerateError(AWMError, ValueError):
    """Input collapses the operation (zero total wealth, zero denominator)."""


class ParseError(AWMError, ValueError):
    """Malformed tabular input. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(AWMError, RuntimeError):
    """An iterative solve hit its step cap. ``diagnostics`` holds the last state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class FitError(AWMError, RuntimeError):
    """Every candidate parameter vector was infeasible."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
