"""Exception types shared across the package."""


class TangmaxError(Exception):
    """Base class for all package errors."""


class DomainError(TangmaxError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class ValidationError(TangmaxError, ValueError):
    """A config or spec failed schema validation."""


class BudgetError(TangmaxError, RuntimeError):
    """A computation would exceed its configured sample budget.

    Carries the budget that would have been required so callers can decide
    whether to rerun with a larger one.
    """

    def __init__(self, message: str, required: int, budget: int):
        super().__init__(message)
        self.required = required
        self.budget = budget


class StructuralError(TangmaxError, ValueError):
    """An input object violates a structural precondition (missing lattice
    points, regime mismatch, ...)."""
