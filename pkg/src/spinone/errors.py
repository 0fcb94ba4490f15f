"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its target accuracy.

    Carries the best residual (or objective) achieved so the caller can
    decide whether the partial result is still usable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds a hard size cap (memory/time)."""


class PositivityError(ValueError):
    """A matrix that must be positive semidefinite has a genuinely
    negative eigenvalue (below roundoff tolerance)."""


class SupportError(ValueError):
    """Relative entropy is infinite: the first state has weight outside
    the support of the second. Distinct from numerical failure."""
