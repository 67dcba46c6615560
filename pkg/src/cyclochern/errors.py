"""Exception types shared across the package."""


class CyclochernError(Exception):
    """Base class for all package errors."""


class AlgebraError(CyclochernError):
    """Invalid algebra data or an operation on mismatched algebras."""


class InvalidInputError(CyclochernError):
    """An argument violates a documented precondition."""


class BudgetError(CyclochernError):
    """A dense evaluation would exceed the configured work budget."""


class InconsistencyError(CyclochernError):
    """Independent computations of the same quantity disagree."""
