"""Closed-form exponents and Pohozaev coefficients.

Everything here is plain double-precision arithmetic.  The separable ansatz
``u(x) = |x|^-beta * omega(x/|x|)`` for ``-Delta_p u = eps u^q`` ties ``beta``
to ``q`` through ``beta_q = p/(q+1-p)``; the remaining exponents follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

#: Value of the critical exponent when ``p >= N - 1``.
INFINITE = math.inf


def _check_p(p: float) -> None:
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p!r}")


def _check_N(N: int) -> None:
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N!r}")


def lambda_of_beta(beta: float, p: float, N: int) -> float:
    """Zeroth-order exponent ``beta(p-1) + p - N``."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    _check_p(p)
    _check_N(N)
    return beta * (p - 1) + p - N


def beta_q(q: float, p: float) -> float:
    """Scaling exponent forced by the separable ansatz, ``p/(q+1-p)``."""
    _check_p(p)
    if not q > p - 1:
        raise DomainError(f"q must exceed p-1={p - 1!r}, got {q!r}")
    return p / (q + 1 - p)


def q_from_beta(beta: float, p: float) -> float:
    """Inverse of :func:`beta_q`: ``q + 1 = p(1+beta)/beta``."""
    _check_p(p)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    return p * (1 + beta) / beta - 1


def q_critical(p: float, N: int) -> float:
    """Critical exponent ``(N-1)p/(N-1-p) - 1``, or :data:`INFINITE` if ``p >= N-1``."""
    _check_p(p)
    _check_N(N)
    if p >= N - 1:
        return INFINITE
    return (N - 1) * p / (N - 1 - p) - 1


def beta_critical(p: float, N: int) -> float:
    """Critical exponent ``(N-1-p)/p`` at which A, B and C vanish together."""
    _check_p(p)
    _check_N(N)
    if p >= N - 1:
        raise DomainError(f"beta_c needs p < N-1, got p={p!r}, N={N!r}")
    return (N - 1 - p) / p


@dataclass(frozen=True)
class ProblemParams:
    """Parameters of ``-Delta_p u = epsilon u^q`` and of the reduced problem.

    ``beta`` is kept independent of ``q``: the integral identity and the
    existence theorems on the sphere hold for any admissible ``beta``.  Use
    :meth:`separable` to tie it to ``q``.
    """

    p: float
    q: float
    epsilon: int
    beta: float
    N: int

    def __post_init__(self):
        _check_p(self.p)
        _check_N(self.N)
        if not self.q > self.p - 1:
            raise DomainError(f"q must exceed p-1, got q={self.q!r}, p={self.p!r}")
        if self.epsilon not in (1, -1):
            raise DomainError(f"epsilon must be +1 or -1, got {self.epsilon!r}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "epsilon", int(self.epsilon))

    @classmethod
    def separable(cls, p: float, q: float, epsilon: int, N: int) -> "ProblemParams":
        return cls(p=p, q=q, epsilon=epsilon, beta=beta_q(q, p), N=N)

    @property
    def d(self) -> int:
        return self.N - 1

    @property
    def lam(self) -> float:
        return lambda_of_beta(self.beta, self.p, self.N)

    @property
    def beta_q(self) -> float:
        return beta_q(self.q, self.p)

    @property
    def q_c(self) -> float:
        return q_critical(self.p, self.N)

    @property
    def beta_c(self) -> float:
        return beta_critical(self.p, self.N)

    def replace(self, **changes) -> "ProblemParams":
        fields = dict(p=self.p, q=self.q, epsilon=self.epsilon, beta=self.beta, N=self.N)
        fields.update(changes)
        return ProblemParams(**fields)


@dataclass(frozen=True)
class PohozaevCoeffs:
    A: float
    B: float
    C: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.A, self.B, self.C)


def pohozaev_coeffs(params: ProblemParams) -> PohozaevCoeffs:
    """Coefficients of the integral identity for free ``(beta, q)``."""
    p, q, b, N = params.p, params.q, params.beta, params.N
    k = p * b + p - N
    A = -(N - 1) / (q + 1) - b * k
    B = (N - 1 - p) / p + b * k
    C = b * b * ((N - 1) / p - k * params.lam)
    return PohozaevCoeffs(A, B, C)


def pohozaev_coeffs_factored(beta: float, p: float, N: int) -> PohozaevCoeffs:
    """Factored coefficients on the coupling curve ``q + 1 = p(1+beta)/beta``.

    Every entry carries the factor ``beta - beta_c``.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    bc = beta_critical(p, N)
    A = -(beta / (beta + 1)) * p * (beta + 1 - 1 / p) * (beta - bc)
    B = (beta - bc) * (beta * p - 1)
    C = beta**2 * (beta - bc) * (1 - p) * (p * beta - 1 - p * (N - p) / (p - 1))
    return PohozaevCoeffs(A, B, C)
