"""Exception hierarchy shared by every qsoliton module."""


class QSolitonError(Exception):
    """Base class for all engine errors."""


class DomainError(QSolitonError, ValueError):
    """A point lies outside the chart domain."""


class MetricError(QSolitonError, ValueError):
    """Metric components are not symmetric or not positive definite."""


class ValenceError(QSolitonError, ValueError):
    """A tensor field of the wrong valence was supplied."""


class DimensionError(QSolitonError, ValueError):
    """An operation was requested in a dimension where it is undefined."""


class ExpressionError(QSolitonError, ValueError):
    """An expression or declarative chart file could not be parsed."""


class UnknownExampleError(QSolitonError, ValueError):
    """Example name not present in the library."""


class UnknownCheckError(QSolitonError, ValueError):
    """Check name not present in the check registry."""


class JetOrderError(QSolitonError, ValueError):
    """A derivative beyond the available jet order was requested."""


class CriticalPointError(QSolitonError):
    """Quantity undefined because the potential has a critical point here."""


class InapplicableCheck(QSolitonError):
    """Preconditions of a check do not hold; carries the reason."""

    def __init__(self, reason: str, **details: object) -> None:
        super().__init__(reason)
        self.reason = reason
        self.details = details


class NumericalFailure(QSolitonError):
    """Non-finite values, failed shooting or similar numeric breakdown."""
