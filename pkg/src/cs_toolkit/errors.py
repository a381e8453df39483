"""Shared exception types."""


class IllConditionedError(RuntimeError):
    """A linear system needed by an estimator is singular or numerically unusable."""
