"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConvergenceError(RuntimeError):
    """An iterative routine failed to reach its tolerance."""


class UnreachableToleranceError(ConvergenceError):
    """No truncation level below the search cap meets the requested tolerance.

    Attributes:
        best_c: Largest truncation level examined.
        best_bound: Bound value at ``best_c``.
    """

    def __init__(self, message: str, best_c: float, best_bound: float):
        super().__init__(message)
        self.best_c = best_c
        self.best_bound = best_bound


class SingularPrecisionError(DomainError):
    """A posterior precision matrix is numerically singular."""
