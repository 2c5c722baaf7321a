"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class TruncVolError(Exception):
    """Base class for all errors raised by truncvol."""


class ValidationError(TruncVolError):
    """An instance violates the representation invariants."""


class NonConvexPWL(ValidationError):
    pass


class NegativeCoefficient(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NegativeInput(TruncVolError, ValueError):
    pass


class ParseError(TruncVolError, ValueError):
    pass


class InterceptBelowBudget(TruncVolError):
    """Axis halving reached ``2**-max_bits`` without finding a feasible point.

    The body then has volume below ``2**-max_bits`` and callers report it as
    effectively zero.
    """

    def __init__(self, axis: int, max_bits: int):
        super().__init__(f"axis {axis}: no feasible point down to 2^-{max_bits}")
        self.axis = axis
        self.max_bits = max_bits


class ZeroBound(TruncVolError):
    """A constraint has bound 0 but a nonzero left-hand side."""


class TooNarrow(TruncVolError, ValueError):
    """Cube-cover precondition ``u * ell > 2 n sqrt(n)`` fails."""


class BadDelta(TruncVolError, ValueError):
    pass


class NotPowerOfTwo(TruncVolError, ValueError):
    pass


class OutOfRange(TruncVolError, ValueError):
    pass


class EmptySource(TruncVolError):
    """The rounded solution set S is empty, hence so is Z."""


class MismatchedShapes(TruncVolError, ValueError):
    pass


class WidthExceeded(TruncVolError):
    """A layer grew beyond the configured width cap."""


class BudgetExceeded(TruncVolError):
    pass


class TooManySubsets(TruncVolError):
    pass
