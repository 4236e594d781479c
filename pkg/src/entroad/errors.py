"""Exception hierarchy shared by every module."""


class EntroadError(Exception):
    pass


class DomainError(EntroadError, ValueError):
    """An argument lies outside the domain of the operation."""


class SamplingError(EntroadError):
    """Rejection sampling hit its retry cap."""


class UnsupportedError(EntroadError):
    """The request is well formed but outside what the engine supports."""


class ValidationError(EntroadError):
    """A configuration document failed to load or type-check."""


class ConvergenceError(EntroadError):
    """The solver ran out of iterations before meeting its tolerance.

    ``best`` holds the best iterate found so far as a ``MaxResult``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
