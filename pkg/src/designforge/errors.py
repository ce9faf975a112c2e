"""Exception types raised by designforge."""


class DesignForgeError(Exception):
    """Base class for all library errors."""


class ArgumentError(DesignForgeError, ValueError):
    """Invalid argument (bad parameter range, empty input, ...)."""


class DomainError(ArgumentError):
    """A point lies outside the domain of the design problem."""


class DegeneracyError(DesignForgeError, ArithmeticError):
    """Numerical rank failure during a linear-algebra reduction."""


class ConvergenceError(DesignForgeError, RuntimeError):
    """Refinement failed to reach its residual target.

    The best point set seen is kept on the exception so callers can
    inspect how close the solver got.
    """

    def __init__(self, message, best_residual=float("inf"), best_points=None, N=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best_points = best_points
        self.N = N


class UnsupportedDimensionError(ArgumentError):
    """Recursive sphere graph requested above the configured depth cap."""
