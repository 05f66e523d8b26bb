"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class DegenerateError(ValueError):
    """A ratio of logarithms has a zero or infinite denominator."""


class RankDeficiencyError(ValueError):
    """Gram-Schmidt met a (numerically) dependent row."""


class InsufficientDataError(ValueError):
    """Too few admissible points to fit a model."""


class BoxTooSmallError(RuntimeError):
    """The enumeration search region cannot contain the proven bound."""
