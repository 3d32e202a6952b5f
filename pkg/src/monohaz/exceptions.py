"""Exception types shared across the package."""


class ParseError(ValueError):
    """A CSV file violates the expected layout; message names the line."""


class FitError(RuntimeError):
    """Base class for estimation failures."""


class SeparationError(FitError):
    """Monotone partial likelihood: the coefficient diverges."""


class ConvergenceError(FitError):
    """An iterative fit exhausted its iteration budget.

    The last iterate is attached as `last_iterate` when available.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class NonIdentifiableError(FitError):
    """The likelihood has no interior maximizer (e.g. no events)."""


class BootstrapError(RuntimeError):
    """Too many bootstrap replicates failed; carries the failure seeds."""

    def __init__(self, message, failure_seeds=()):
        super().__init__(message)
        self.failure_seeds = list(failure_seeds)
