"""Exception hierarchy.

``ValidationError`` subclasses signal bad inputs, ``SolverError`` subclasses
signal numerical failures. The CLI maps them to exit codes 2 and 3.
"""


class OtGeodesicError(Exception):
    pass


class ValidationError(OtGeodesicError, ValueError):
    pass


class SolverError(OtGeodesicError, RuntimeError):
    pass


class ShapeMismatchError(ValidationError):
    pass


class DimensionMismatchError(ShapeMismatchError):
    pass


class NonStochasticLabelError(ValidationError):
    pass


class NonFiniteValueError(ValidationError):
    pass


class EmptyClassError(ValidationError):
    pass


class SoftLabelsError(ValidationError):
    pass


class IndexOutOfRangeError(ValidationError, IndexError):
    pass


class OutOfRangeError(ValidationError):
    pass


class NotPSDError(ValidationError):
    pass


class SourceMismatchError(ValidationError):
    pass


class KTooLargeError(ValidationError):
    pass


class BadWeightsError(ValidationError):
    pass


class BadSpecError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ProblemTooLargeError(ValidationError):
    pass


class NoConvergenceError(SolverError):
    pass


class NumericalUnderflowError(SolverError):
    pass


class DegenerateRowError(SolverError):
    pass


class SolverFailureError(SolverError):
    pass


class DatasetFormatError(OtGeodesicError, OSError):
    """Unreadable or malformed dataset file."""
