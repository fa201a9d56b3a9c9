"""Exception types raised by the estimation and testing routines."""


class InarError(Exception):
    """Base class for all package errors."""


class SingularDesign(InarError):
    """The CLS design matrix is singular or too ill-conditioned to invert.

    Attributes
    ----------
    condition_number : float
        Condition number of the (restricted) design matrix Q_n.
    """

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class NotPositiveDefinite(InarError):
    """A matrix required to be positive definite failed the eigenvalue check."""

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class UnstableModel(InarError, ValueError):
    """An operation that needs a stable model (sum of coefficients < 1) got an unstable one."""
