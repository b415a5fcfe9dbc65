"""Exception types shared across the toolkit."""


class HfSurvivalError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(HfSurvivalError):
    """Column set, column order, or feature-name mismatch."""


class ParseError(HfSurvivalError):
    """A cell could not be parsed; carries row/column context."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyInputError(HfSurvivalError):
    """No data rows where at least one is required."""


class StratificationError(HfSurvivalError):
    """A class required for stratified splitting has zero rows."""


class DegenerateClassError(HfSurvivalError):
    """An operation requiring both classes saw only one."""


class InvalidGridError(HfSurvivalError):
    """A hyperparameter grid is malformed (empty value list, duplicate name)."""


class InvalidCombinationError(HfSurvivalError):
    """A hyperparameter combination cannot form a valid model config."""


class NoViableCombinationError(HfSurvivalError):
    """Every combination in a grid search was skipped."""
