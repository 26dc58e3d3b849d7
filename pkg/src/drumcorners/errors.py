"""Exception hierarchy shared by all modules."""


class DrumError(Exception):
    """Base class for every error raised by drumcorners."""


class ValidationError(DrumError, ValueError):
    pass


class ParseError(DrumError, ValueError):
    pass


# geometry
class SelfIntersecting(ValidationError):
    pass


class DegenerateVertex(ValidationError):
    pass


class ZeroArea(ValidationError):
    pass


class NotSimplyConnected(ValidationError):
    pass


# special functions / quadrature
class NonPositiveArgument(DrumError, ValueError):
    pass


class ToleranceNotMet(DrumError, ArithmeticError):
    pass


class DivergentConfiguration(DrumError, ValueError):
    pass


class EvaluationFailure(DrumError, ArithmeticError):
    pass


class UnstableResult(DrumError, ArithmeticError):
    pass


# kernels
class NonPositiveTime(DrumError, ValueError):
    pass


class PointOutsideDomain(DrumError, ValueError):
    pass


class UnsupportedBC(DrumError, ValueError):
    pass


class NonConvergent(DrumError, ArithmeticError):
    pass


class QuadratureFailure(DrumError, ArithmeticError):
    pass


class DiagonalSingularity(DrumError, ValueError):
    pass


# trace
class AngleOutOfRange(DrumError, ValueError):
    pass


class RobinWithZeroBeta(DrumError, ValueError):
    pass


class TailTooLarge(DrumError, ArithmeticError):
    pass


class IllConditionedFit(DrumError, ArithmeticError):
    pass


# eigensolve
class InvalidDimensions(DrumError, ValueError):
    pass


class RootBracketFailure(DrumError, ArithmeticError):
    pass


class MeshFailure(DrumError, RuntimeError):
    pass


class EigenIterationStall(DrumError, RuntimeError):
    pass


# harness
class KernelUnavailable(DrumError, ValueError):
    pass


class FitFailure(DrumError, ArithmeticError):
    pass


class IoError(DrumError, OSError):
    """Output could not be written."""
