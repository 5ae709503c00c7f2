"""Exception hierarchy shared by all solver modules."""


class LongPoissonError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(LongPoissonError, ValueError):
    """An argument violates a documented precondition."""


class EstimationFailure(LongPoissonError):
    """An eigenvalue iteration did not converge within its iteration cap."""


class SolverFailure(LongPoissonError):
    """A linear solve broke down (singular or near-singular system)."""


class DegenerateRHS(LongPoissonError, ValueError):
    """The right-hand side vanishes identically."""


class DegenerateIterate(LongPoissonError):
    """An ALS iterate collapsed to zero."""


class DegenerateReference(LongPoissonError, ValueError):
    """A relative error was requested against a zero reference field."""


class FitFailure(LongPoissonError):
    """The exponential-sum optimiser did not reach a near-best sum.

    The best sum found so far is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
