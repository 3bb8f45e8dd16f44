"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented contract."""


class NumericError(ArithmeticError):
    """A linear-algebra step failed beyond recovery."""


class DegeneratePriorError(RuntimeError):
    """Rejection sampling from a prior exhausted its retry budget."""
