"""Exception types shared across the package."""


class MsaError(Exception):
    """Base class for all errors raised by msabench."""


class ValidationError(MsaError, ValueError):
    pass


class DimensionError(ValidationError):
    pass


class RankError(MsaError, ValueError):
    pass


class DegenerateGapError(MsaError, ValueError):
    """The requested minor subspace is not unique (eigenvalues tie across the cut)."""


class ConditioningError(MsaError, ArithmeticError):
    """A matrix that must be positive definite is indefinite or near singular.

    ``smallest_eigenvalue`` holds the estimate that triggered the error.
    """

    def __init__(self, message, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class ConvergenceError(MsaError, RuntimeError):
    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class NumericalBlowupError(MsaError, ArithmeticError):
    """Learner weights became non-finite or exceeded the divergence bound."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
