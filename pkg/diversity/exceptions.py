"""Errors raised by the diversity toolkit.

Each class also derives from the builtin the calling code would otherwise
catch (ValueError / RuntimeError), so generic handlers keep working.
"""


class DiversityError(Exception):
    """Base class for every toolkit error."""


class EmptyInputError(DiversityError, ValueError):
    pass


class RangeError(DiversityError, ValueError):
    pass


class DomainError(DiversityError, ValueError):
    pass


class ConfigurationError(DiversityError, ValueError):
    pass


class ParameterError(DiversityError, ValueError):
    pass


class EdgeListParseError(DiversityError, ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ConvergenceError(DiversityError, RuntimeError):
    def __init__(self, message: str, best_value=None, best_vector=None):
        super().__init__(message)
        self.best_value = best_value
        self.best_vector = best_vector


class GenerationComplete(DiversityError):
    """Raised by a generator when no further edge can be added."""


class VerificationError(DiversityError):
    def __init__(self, message: str, record: dict | None = None):
        super().__init__(message)
        self.record = record or {}


class UndefinedMeasureError(DiversityError, ValueError):
    """The measure has no value on this input (a hole in the series)."""


class SkippedMeasureError(DiversityError):
    """The measure does not apply to this kind of network."""
