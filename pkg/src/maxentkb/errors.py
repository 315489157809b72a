"""Exception hierarchy for the knowledge-base shell.

Errors raised while reading text carry a position (1-based line/column);
errors raised by in-memory operations usually do not.
"""

from __future__ import annotations


class KbError(Exception):
    """Base class for all shell errors."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(self._format())

    def _format(self) -> str:
        if self.line is not None and self.col is not None:
            return f"line {self.line}, col {self.col}: {self.message}"
        if self.line is not None:
            return f"line {self.line}: {self.message}"
        return self.message


class SchemaError(KbError):
    """A variable, value, or table does not fit the declared schema."""


class CapacityError(KbError):
    """An explicit enumeration would exceed the configured size limits."""


class KindError(KbError):
    """A comparator was used on a variable kind that does not support it."""


class OutOfRangeError(KbError):
    """A probability or weight lies outside [0, 1]."""


class ParseError(KbError):
    """Malformed concrete syntax."""


class ResolutionError(ParseError):
    """Syntax is well-formed but names an unknown variable or value."""


class StateError(KbError):
    """An operation was requested before its prerequisites were built."""


class InternalError(KbError):
    """A construction invariant failed; indicates a bug, not bad input."""


class UndefinedConditionalError(KbError):
    """Conditional probability with a zero-probability premise."""

    def __init__(self, message: str, premise=None):
        self.premise = premise
        super().__init__(message)


class InfeasibleRuleError(KbError):
    """A rule cannot be satisfied on the current support."""

    def __init__(self, message: str, rule_id: str | None = None):
        self.rule_id = rule_id
        super().__init__(message)


class PropagationSupportError(KbError):
    """A propagated update puts mass where the receiving table has none."""


class ImpossibleEvidenceError(KbError):
    """Evidence conflicts with a hard zero of the distribution."""

    def __init__(self, message: str, variable: str | None = None, value: str | None = None):
        self.variable = variable
        self.value = value
        super().__init__(message)


class InfeasibleHypotheticalsError(KbError):
    """The hypothetical constraints of a query could not be satisfied."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
