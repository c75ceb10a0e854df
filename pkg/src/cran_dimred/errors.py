"""Exception hierarchy shared by the simulation modules."""


class DimRedError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DimRedError, ValueError):
    """Input violates a documented precondition (shape, range, symmetry)."""


class DegenerateInputError(DimRedError, ValueError):
    """Input is structurally valid but rank deficient or otherwise degenerate."""


class NumericalError(DimRedError, ArithmeticError):
    """A factorization failed (singular or indefinite matrix)."""


class DomainError(DimRedError, ArithmeticError):
    """Quantity is undefined or infinite for this input (e.g. a rank-deficient limit)."""


class InfeasibleError(DimRedError, ValueError):
    """A design problem has no solution for the given configuration."""
