"""Exception hierarchy.

Everything derives from :class:`MonopoleError`. ``ValidationError`` covers
bad input; ``NumericalError`` covers solver failures. The CLI maps them to
exit codes 2 and 3.
"""


class MonopoleError(Exception):
    pass


class ValidationError(MonopoleError, ValueError):
    pass


class NumericalError(MonopoleError, ArithmeticError):
    pass


class ShapeMismatchError(ValidationError):
    pass


class StepTooSmallError(ValidationError):
    pass


class ChartExcludedError(ValidationError):
    pass


class PoleAtZeroError(ValidationError):
    pass


class DirectionMismatchError(ValidationError):
    pass


class NotRealError(ValidationError):
    pass


class InsufficientSamplesError(ValidationError):
    pass


class OutOfWindowError(ValidationError):
    pass


class PoleDataMissingError(ValidationError):
    pass


class QuadratureNotConvergedError(NumericalError):
    pass


class ToleranceNotMetError(NumericalError):
    pass


class StepUnderflowError(NumericalError):
    pass


class AsymptoticRegimeError(NumericalError):
    pass


class EigenGapError(NumericalError):
    pass


class RootsNotFoundError(NumericalError):
    pass


class PoleCountMismatchError(NumericalError):
    pass


class BasednessViolatedError(NumericalError):
    pass


class DegreeUnstableError(NumericalError):
    pass


class BlowUpError(NumericalError):
    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


class SubspaceSelectionError(NumericalError):
    pass


class FrameAlignmentError(NumericalError):
    pass
