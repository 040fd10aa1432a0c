"""Exception hierarchy shared across the package."""


class VarsError(Exception):
    """Base class for all errors raised by vars_attn."""

    category = "error"


class DimensionError(VarsError, ValueError):
    category = "dimension"


class ArgumentError(VarsError, ValueError):
    category = "argument"


class NumericError(VarsError, ArithmeticError):
    """A non-finite value showed up during a computation."""

    category = "numeric"

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class NumericRangeError(NumericError):
    category = "numeric-range"


class ConvergenceError(NumericError):
    """An iterative method ran out of iterations; ``last`` holds its final iterate."""

    category = "convergence"

    def __init__(self, message, last=None, iteration=None):
        super().__init__(message, iteration=iteration)
        self.last = last


class InstabilityError(NumericError):
    category = "instability"

    def __init__(self, message, spectral_radius=None, iteration=None):
        super().__init__(message, iteration=iteration)
        self.spectral_radius = spectral_radius


class DegenerateAtomError(VarsError, ValueError):
    category = "degenerate-atom"


class FormatError(VarsError, ValueError):
    """Malformed input file."""

    category = "format"
