"""Exception and warning types raised across the package."""


class ShiftKrylovError(Exception):
    """Base class for all package errors."""


class DimensionError(ShiftKrylovError, ValueError):
    """Operand shapes do not agree."""


class SingularProjected(ShiftKrylovError):
    """A small projected matrix is numerically singular.

    Attributes
    ----------
    index : int or None
        Offending diagonal (pivot) index, when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularOperator(ShiftKrylovError):
    """A (shifted) large operator is numerically singular."""

    def __init__(self, message, index=None, shift=None):
        super().__init__(message)
        self.index = index
        self.shift = shift


class NotConverged(ShiftKrylovError):
    """An iterative solve stopped before meeting its tolerance.

    The best iterate and its residual norm travel with the exception so the
    caller can decide what to do with them.
    """

    def __init__(self, message, x=None, residual=None, stats=None, pole=None):
        super().__init__(message)
        self.x = x
        self.residual = residual
        self.stats = stats
        self.pole = pole


class StructureError(ShiftKrylovError):
    """A sparsity pattern lacks an entry the algorithm needs."""


class BreakdownExact(ShiftKrylovError):
    """The Krylov space became invariant (happy breakdown)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class MatrixMarketError(ShiftKrylovError, ValueError):
    """Malformed or unsupported Matrix Market file."""


class ConfigError(ShiftKrylovError, ValueError):
    """Invalid experiment configuration; ``field`` names the bad key."""

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class DeflationWarning(UserWarning):
    """Block right-hand side was rank deficient and has been deflated."""
