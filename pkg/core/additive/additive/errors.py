"""Exception hierarchy for the additive counting toolkit."""

from typing import Optional


class AdditiveError(Exception):
    """Base class for every error raised by the toolkit."""

    kind = "error"


class InvalidArgumentError(AdditiveError, ValueError):
    kind = "invalid-argument"


class InputFormatError(AdditiveError):
    """A function, plan or coefficient file could not be parsed."""

    kind = "input-format"

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, field: Optional[str] = None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


class NumericalInconsistencyError(AdditiveError):
    kind = "numerical-inconsistency"


class SearchFailureError(AdditiveError):
    kind = "search-failure"


class PlanRejectedError(AdditiveError):
    kind = "plan-rejected"


class InternalError(AdditiveError):
    kind = "internal-error"


class StageError(AdditiveError):
    """Wraps a failure inside the transfer chain with the stage it happened in."""

    kind = "stage-failure"

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


def is_input_error(exc: BaseException) -> bool:
    """True for errors that map to exit code 2."""
    if isinstance(exc, StageError):
        return is_input_error(exc.cause)
    return isinstance(exc, (InvalidArgumentError, InputFormatError))


__all__ = [
    "AdditiveError",
    "InvalidArgumentError",
    "InputFormatError",
    "NumericalInconsistencyError",
    "SearchFailureError",
    "PlanRejectedError",
    "InternalError",
    "StageError",
    "is_input_error",
]
