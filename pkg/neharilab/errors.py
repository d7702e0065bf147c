"""
Exception hierarchy for NehariLab.

Library code raises these; only the CLI maps them to exit codes.
"""

from typing import Any, Dict, List, Optional, Sequence


class NehariLabError(Exception):
    """Base class for every error raised by NehariLab."""

    exit_code = 1


class ConfigError(NehariLabError):
    """Invalid or unreadable run configuration."""

    exit_code = 1


class PreconditionError(NehariLabError):
    """An operation was called outside its domain of validity."""

    exit_code = 4


class GridError(PreconditionError):
    pass


class GridMismatchError(PreconditionError):
    pass


class NoPositiveSpectrumError(PreconditionError):
    """The weight has no positive part, so (EP) has no positive eigenvalue."""


class InsufficientSpectrumError(PreconditionError):
    pass


class SpectrumTooShortError(PreconditionError):
    pass


class ModelParameterError(PreconditionError):
    pass


class ExpressionSyntaxError(PreconditionError):
    """Syntax error in a user expression, with the character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class ModelEvaluationError(PreconditionError):
    """Non-finite nonlinearity values at some evaluation points."""

    def __init__(self, message: str, points: Optional[List[Any]] = None):
        super().__init__(message)
        self.points = points or []


class NotInAError(PreconditionError):
    """The direction is outside the admissible cone; the fiber has no maximum."""


class BracketOverflowError(PreconditionError):
    pass


class FailedNegativeStartError(PreconditionError):
    pass


class DimensionUnsupportedError(PreconditionError):
    pass


class MissingIngredientError(PreconditionError):
    def __init__(self, missing: Sequence[str]):
        super().__init__("missing ingredient(s): " + ", ".join(missing))
        self.missing = list(missing)


class BetaUndecidedError(PreconditionError):
    pass


class HypothesisError(PreconditionError):
    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class RegimeNotAttainedError(PreconditionError):
    def __init__(self, message: str, ledger: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.ledger = ledger


class BoundaryEscapeError(NehariLabError):
    """Descent drifts to the boundary of the admissible sphere slice."""

    exit_code = 2

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class NonConvergenceError(NehariLabError):
    exit_code = 3

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report
