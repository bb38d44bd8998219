"""Exception hierarchy shared by the solvers."""

from __future__ import annotations


class LeconeError(Exception):
    """Base class for all package errors."""


class DomainError(LeconeError, ValueError):
    """An argument lies outside the admissible parameter range."""


class SingularDenominatorError(LeconeError, ArithmeticError):
    """The radial normal form degenerated (omega and omega' both vanish)."""


class IntegrationError(LeconeError, RuntimeError):
    """The ODE integrator failed; carries the last accepted state."""

    def __init__(self, message: str, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class BracketError(LeconeError, RuntimeError):
    """No sign change could be located for a root search.

    ``window`` is the scanned interval and ``last_bracket`` the last pair of
    points that was examined.
    """

    def __init__(self, message: str, window=None, last_bracket=None):
        super().__init__(message)
        self.window = window
        self.last_bracket = last_bracket


class MonotonicityError(LeconeError, RuntimeError):
    """A miss function assumed monotone showed the wrong sign ordering."""


class NoBracketError(BracketError):
    """The amplitude scan found no sign change of the miss function.

    This is numerical evidence of non-existence, not a proof.
    """

    def __init__(self, message: str, amplitudes=None, misses=None):
        super().__init__(message, window=None if amplitudes is None else (amplitudes[0], amplitudes[-1]))
        self.amplitudes = amplitudes
        self.misses = misses


class MultiplicityError(LeconeError, RuntimeError):
    """Several distinct positive solutions were found where one is expected."""

    def __init__(self, message: str, roots=None):
        super().__init__(message)
        self.roots = roots


class ConvergenceError(LeconeError, RuntimeError):
    """An iterative method hit its iteration cap."""


class SignChangeError(LeconeError, RuntimeError):
    """A computed first eigenfunction changed sign."""


class ContinuationError(LeconeError, RuntimeError):
    """Homotopy lost the root bracket; ``last_good_p`` records progress."""

    def __init__(self, message: str, last_good_p: float | None = None):
        super().__init__(message)
        self.last_good_p = last_good_p
