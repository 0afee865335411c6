"""Exception types shared across the package."""


class SuperANDError(Exception):
    """Base class for package-specific failures."""


class ParameterError(SuperANDError, ValueError):
    """An argument or configuration value is outside its allowed domain."""


class DegenerateInputError(SuperANDError, ValueError):
    """Input is numerically degenerate (zero vector, single-row bank, ...)."""


class StateError(SuperANDError, RuntimeError):
    """An object was used outside its valid lifecycle (stale cache, bad membership)."""


class DataFormatError(SuperANDError, ValueError):
    """A file does not conform to its declared binary or text layout."""


class NumericFailure(SuperANDError, ArithmeticError):
    """A computation produced non-finite values and was aborted."""
