"""Exception types raised across the package.

Every class carries a fixed ``exit_code`` used by the command-line front end.
"""


class GravlocError(Exception):
    exit_code = 1


class DivergentSelfEnergy(GravlocError, ArithmeticError):
    """Self-interaction of an unsmeared point mass; smooth the profile first."""

    exit_code = 3


class PointMassUndefined(GravlocError, ValueError):
    exit_code = 4


class NonPositiveWidth(GravlocError, ValueError):
    exit_code = 5


class FitIllConditioned(GravlocError, ArithmeticError):
    exit_code = 6


class NoDecoherence(GravlocError, ArithmeticError):
    """Decoherence rate vanishes, so the decoherence time is infinite."""

    exit_code = 7


class MismatchedBulk(GravlocError, ValueError):
    exit_code = 8


class NonConvergence(GravlocError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations

    exit_code = 9


class NoBoundState(NonConvergence):
    """No attraction, hence no solitary state (free particle)."""

    exit_code = 10


class GridTooSmall(GravlocError, RuntimeError):
    exit_code = 11


class StabilityViolation(GravlocError, RuntimeError):
    exit_code = 12


class InsufficientDecay(GravlocError, ArithmeticError):
    exit_code = 13


class QuadratureError(GravlocError, RuntimeError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved

    exit_code = 14


class OutOfModelDomain(GravlocError, ValueError):
    """Requested displacement lies outside the validity range of a profile model."""

    exit_code = 15
