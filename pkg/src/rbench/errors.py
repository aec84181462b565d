"""Exception types shared across the engine."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for errors raised by the scoring engine."""


class RecordParseError(EngineError):
    """A record file could not be parsed into a valid record.

    Carries the 1-based line number and the offending field when known so
    callers can point at the exact spot in a JSONL file.
    """

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class GradeParseError(EngineError):
    """A stability grade token was not one of A..E."""

    def __init__(self, token: str):
        self.token = token
        super().__init__(f"invalid stability grade token: {token!r}")


class SchemaError(EngineError):
    """A record violates the schema or one of its invariants."""


class JoinError(EngineError):
    """A score row references a sample that is not in the manifest."""


class MissingModelError(EngineError):
    """A requested model has no pairwise comparisons."""


class ConstantInputError(EngineError):
    """Rank correlation is undefined for a constant score vector."""


class SingularFitError(EngineError):
    """A least-squares calibration fit is degenerate (zero predictor variance)."""


class InsufficientDataError(EngineError):
    """Too few points for the requested statistic."""
