"""Exception types shared across the package."""


class CapaxError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(CapaxError):
    """Two loops (or a loop and a context) disagree on the ambient dimension."""


class AliasingError(CapaxError):
    """A sampling grid is too coarse for the requested truncation order."""


class InputError(CapaxError):
    """Malformed user input (domain files, configs, parameters)."""


class DegenerateSpectrumError(CapaxError):
    """Two Reeb spectrum values below the slope collide within the margin.

    Carries the clashing pair so callers can report it.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NumericalDegeneracyError(CapaxError):
    """An eigenvalue, crossing or bisection sits too close to a decision
    threshold for the result to be certified."""


class ConvergenceError(CapaxError):
    """An iterative solve (Newton, flow) failed to converge within budget."""
