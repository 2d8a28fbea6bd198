"""Shared exception types."""


class ParseError(ValueError):
    """A data file violates its expected layout or value domain."""


class MalformedAnnotationError(ParseError):
    """An annotated frame has the wrong number of tracing rows."""


class ConsistencyError(ParseError):
    """A labeled category disagrees with the rubric applied to its deductions."""


class InsufficientSubjectsError(ValueError):
    """Too few subjects to build the requested cross-validation folds."""


class CheckpointError(RuntimeError):
    """A checkpoint directory is missing or self-inconsistent."""


class FrozenBackboneError(RuntimeError):
    """Parameters of a backbone that must stay frozen changed during training."""


class SessionError(RuntimeError):
    """A guidance session is missing a model it needs or is misconfigured."""
