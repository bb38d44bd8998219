"""Spectral constants of the cap: Lambda_beta, beta_S and lambda_{1,beta}.

``Lambda_beta`` is the value of ``Lambda`` for which the spectral-mode shot
from the pole first vanishes exactly at ``theta0``; the spectral exponent
``beta_S`` solves ``Lambda_beta = beta(p-1) + p - d - 1``.  The first
eigenvalue ``lambda_{1,beta}`` of the weighted p-homogeneous Rayleigh quotient
is computed variationally on piecewise-linear radial functions.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import BracketError, ConvergenceError, DomainError, MonotonicityError, SignChangeError
from .ode import IntegrationOptions, RadialProfile, Spectral, integrate_radial
from .params import ProblemParams
from .roots import refine
from .sphere import CapGeometry

LAMBDA_WINDOW = (1e-6, 1e4)


@dataclass(frozen=True)
class SpectralResult:
    kind: str                      # Lambda_beta | beta_S | lambda_1_beta
    value: float
    beta: float | None
    p: float
    geometry: CapGeometry
    bracket: tuple[float, float] | None
    evaluations: int
    grid_size: int
    profile: RadialProfile | None = field(default=None, repr=False, compare=False)
    eigenfunction: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False, compare=False)


def spectral_params(beta: float, p: float, geometry: CapGeometry) -> ProblemParams:
    # q is not used in spectral mode; any admissible value will do
    return ProblemParams(p=p, q=p, epsilon=1, beta=beta, N=geometry.N)


def spectral_miss(Lam: float, beta: float, p: float, geometry: CapGeometry,
                  options: IntegrationOptions | None = None) -> tuple[float, RadialProfile]:
    """Signed mismatch of the unit-amplitude spectral shot.

    ``omega(theta0) > 0`` if the shot survives, ``theta_zero - theta0 < 0``
    if it vanishes early.  Decreasing in ``Lambda``.
    """
    prof = integrate_radial(1.0, spectral_params(beta, p, geometry), geometry, Spectral(Lam), options)
    if prof.termination.kind == "hit_zero":
        return prof.termination.theta - geometry.theta0, prof
    if prof.termination.kind == "blew_up":
        return 1e12, prof
    return float(prof.omega[-1]), prof


def _expand_bracket(f, x0: float, lo_lim: float, hi_lim: float, factor: float = 2.0, max_steps: int = 200):
    """Geometric search for ``f(lo) > 0 > f(hi)`` starting from ``x0``.

    ``f`` must be decreasing; the opposite ordering raises
    :class:`MonotonicityError`.
    """
    x0 = min(max(x0, lo_lim), hi_lim)
    fx = f(x0)
    evals = 1
    if fx == 0:
        return x0, x0, fx, fx, evals
    if fx > 0:
        lo, f_lo = x0, fx
        x = x0
        for _ in range(max_steps):
            if x >= hi_lim:
                raise BracketError("no sign change below the upper end of the window",
                                   window=(lo_lim, hi_lim), last_bracket=(lo, x))
            x = min(x * factor, hi_lim)
            fx = f(x)
            evals += 1
            if fx <= 0:
                return lo, x, f_lo, fx, evals
            lo, f_lo = x, fx
    else:
        hi, f_hi = x0, fx
        x = x0
        for _ in range(max_steps):
            if x <= lo_lim:
                raise BracketError("no sign change above the lower end of the window",
                                   window=(lo_lim, hi_lim), last_bracket=(x, hi))
            x = max(x / factor, lo_lim)
            fx = f(x)
            evals += 1
            if fx >= 0:
                return x, hi, fx, f_hi, evals
            hi, f_hi = x, fx
    raise BracketError("bracket expansion exhausted", window=(lo_lim, hi_lim))


def lambda_beta(beta: float, p: float, geometry: CapGeometry, tol: float = 1e-10, *,
                guess: float | None = None, window: tuple[float, float] = LAMBDA_WINDOW,
                options: IntegrationOptions | None = None, max_iter: int = 200) -> SpectralResult:
    """Spectral constant ``Lambda_beta`` of the cap by first-zero shooting."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p!r}")

    def f(L):
        return spectral_miss(L, beta, p, geometry, options)[0]

    lo, hi, f_lo, f_hi, evals = _expand_bracket(f, guess if guess else 1.0, *window)
    if f_lo < 0 or f_hi > 0:
        raise MonotonicityError(f"miss not decreasing in Lambda on [{lo!r}, {hi!r}]")
    br = refine(f, lo, hi, f_lo, f_hi, xtol=tol, maxiter=max_iter)
    value = 0.5 * (br.lo + br.hi)
    _, prof = spectral_miss(value, beta, p, geometry, options)
    return SpectralResult("Lambda_beta", value, beta, p, geometry, (br.lo, br.hi),
                          evals + br.evaluations + 1, len(prof.theta), profile=prof)


def beta_S(p: float, geometry: CapGeometry, tol: float = 1e-9, *, guess: float | None = None,
           max_doublings: int = 40, lambda_tol: float = 1e-11,
           options: IntegrationOptions | None = None, max_iter: int = 200) -> SpectralResult:
    """Spectral exponent: the root of ``Lambda_beta - (beta(p-1) + p - d - 1)``."""
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p!r}")
    d = geometry.d
    last = {"Lambda": None}
    count = {"shots": 0}

    def g(b):
        res = lambda_beta(b, p, geometry, lambda_tol, guess=last["Lambda"], options=options)
        last["Lambda"] = res.value
        count["shots"] += res.evaluations
        return res.value - (b * (p - 1) + p - d - 1)

    b0 = guess if guess else max(1.0, float(d - 1))
    try:
        lo, hi, g_lo, g_hi, evals = _expand_bracket(g, b0, 1e-8, 1e8, factor=2.0, max_steps=max_doublings)
    except BracketError as exc:
        raise BracketError(f"beta_S bracket expansion failed after {max_doublings} doublings: {exc}",
                           window=exc.window, last_bracket=exc.last_bracket) from exc
    br = refine(g, lo, hi, g_lo, g_hi, xtol=tol, maxiter=max_iter)
    if not (br.f_lo >= 0 >= br.f_hi):
        raise MonotonicityError("Lambda_beta - lambda(beta) is not decreasing across the bracket")
    value = 0.5 * (br.lo + br.hi)
    return SpectralResult("beta_S", value, value, p, geometry, (br.lo, br.hi), count["shots"], 0)


@functools.lru_cache(maxsize=256)
def cached_beta_S(p: float, geometry: CapGeometry, tol: float = 1e-9) -> float:
    return beta_S(p, geometry, tol).value


@dataclass(frozen=True)
class ContinuationTable:
    p: np.ndarray
    beta_S: np.ndarray
    lipschitz: float                 # max |delta beta_S| / delta p over adjacent entries
    results: tuple = field(repr=False, default=())

    def rows(self):
        return list(zip(self.p.tolist(), self.beta_S.tolist()))


def beta_S_continuation(p_grid, geometry: CapGeometry, tol: float = 1e-9, *,
                        options: IntegrationOptions | None = None) -> ContinuationTable:
    """``beta_S`` along an increasing ``p`` grid, warm-starting each bracket."""
    ps = np.asarray(p_grid, dtype=float)
    if ps.size and (np.any(ps <= 1) or np.any(np.diff(ps) <= 0)):
        raise DomainError("p_grid must be strictly increasing with all entries > 1")
    out = []
    guess = None
    for p in ps:
        res = beta_S(float(p), geometry, tol, guess=guess, options=options)
        out.append(res)
        guess = res.value
    vals = np.array([r.value for r in out])
    lip = float(np.max(np.abs(np.diff(vals)) / np.diff(ps))) if len(ps) > 1 else 0.0
    return ContinuationTable(ps, vals, lip, tuple(out))


# -- variational first eigenvalue -------------------------------------------------------------

class _P1Quotient:
    """``int (beta^2 w^2 + w'^2)^{p/2} sin^{d-1}`` over ``int |w|^p sin^{d-1}`` for P1 ``w``.

    Unknowns are the nodal values at ``theta_0 = 0, ..., theta_{n-1}``;
    ``w(theta0) = 0``.
    """

    def __init__(self, beta, p, geometry: CapGeometry, n: int, gauss_points: int = 4):
        self.beta, self.p, self.n = beta, p, n
        self.h = geometry.theta0 / n
        self.nodes = np.linspace(0.0, geometry.theta0, n + 1)
        xi, wq = np.polynomial.legendre.leggauss(gauss_points)
        self.xi = 0.5 * (xi + 1.0)
        th = self.nodes[:-1, None] + self.h * self.xi[None, :]
        self.W = 0.5 * wq[None, :] * self.h * np.sin(th) ** (geometry.d - 1)

    def _full(self, u):
        return np.append(u, 0.0)

    def _pieces(self, u):
        w = self._full(u)
        v = w[:-1, None] * (1 - self.xi) + w[1:, None] * self.xi
        s = ((w[1:] - w[:-1]) / self.h)[:, None]
        return v, s

    def values(self, u):
        v, s = self._pieces(u)
        num = np.sum(self.W * (self.beta**2 * v * v + s * s) ** (self.p / 2))
        den = np.sum(self.W * np.abs(v) ** self.p)
        return num, den

    def gradients(self, u):
        p, b = self.p, self.beta
        v, s = self._pieces(u)
        e = self.beta**2 * v * v + s * s
        with np.errstate(divide="ignore", invalid="ignore"):
            ep = np.where(e > 0, e ** (p / 2 - 1), 0.0)
        dv = self.W * p * b * b * v * ep
        ds = np.sum(self.W * p * s * ep, axis=1)
        gN = np.zeros(self.n + 1)
        gN[:-1] += dv @ (1 - self.xi) - ds / self.h
        gN[1:] += dv @ self.xi + ds / self.h
        av = self.W * p * np.sign(v) * np.abs(v) ** (p - 1)
        gD = np.zeros(self.n + 1)
        gD[:-1] += av @ (1 - self.xi)
        gD[1:] += av @ self.xi
        return gN[:-1], gD[:-1]

    def preconditioner(self):
        """Banded P1 matrix of ``int (w'^2 + beta^2 w^2) sin^{d-1}`` (Sobolev metric)."""
        n, h = self.n, self.h
        Wsum = self.W.sum(axis=1)
        m00 = self.W @ ((1 - self.xi) ** 2)
        m01 = self.W @ ((1 - self.xi) * self.xi)
        m11 = self.W @ (self.xi**2)
        diag = np.zeros(n + 1)
        off = np.zeros(n)
        diag[:-1] += Wsum / h**2 + self.beta**2 * m00
        diag[1:] += Wsum / h**2 + self.beta**2 * m11
        off[:] = -Wsum / h**2 + self.beta**2 * m01
        ab = np.zeros((3, n))
        ab[0, 1:] = off[: n - 1]
        ab[1, :] = diag[:n]
        ab[2, :-1] = off[: n - 1]
        return ab


def lambda_1_beta(beta: float, p: float, geometry: CapGeometry, n: int = 400, *, tol: float = 1e-13,
                  maxiter: int = 5000) -> SpectralResult:
    """First eigenvalue of the weighted p-homogeneous Rayleigh quotient on radial P1 functions.

    Normalised projected-gradient descent: the gradient is taken in the
    Sobolev metric of the ``p = 2`` quotient, the iterate is rescaled onto
    ``int |w|^p = 1`` after each step and the step length is chosen by Armijo
    backtracking.  The minimiser must keep one sign at all free nodes.
    """
    if not beta > 0 or not p > 1:
        raise DomainError("lambda_1_beta needs beta > 0 and p > 1")
    if n < 64:
        raise DomainError(f"n must be at least 64, got {n!r}")
    Q = _P1Quotient(beta, p, geometry, n)
    ab = Q.preconditioner()

    def normalise(u):
        return u / Q.values(u)[1] ** (1 / p)

    u = normalise(np.cos(np.pi * Q.nodes[:-1] / (2 * geometry.theta0)))
    num, den = Q.values(u)
    R = num / den
    t = 0.5
    for it in range(1, maxiter + 1):
        gN, gD = Q.gradients(u)
        grad = (gN - R * gD) / den
        direction = -solve_banded((1, 1), ab, grad)
        slope = float(grad @ direction)
        if slope > -1e-300:
            break
        t = 0.5
        while True:
            trial = normalise(u + t * direction)
            n_t, d_t = Q.values(trial)
            R_t = n_t / d_t
            if R_t <= R + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        change = R - R_t
        u, num, den, R = trial, n_t, d_t, R_t
        if 0 <= change <= tol * R:
            break
    else:
        raise ConvergenceError(f"lambda_1_beta did not converge in {maxiter} iterations (R={R!r})")

    if not (np.all(u > 0) or np.all(u < 0)):
        raise SignChangeError("discrete first eigenfunction changed sign")
    return SpectralResult("lambda_1_beta", float(R), beta, p, geometry, None, it, n,
                          eigenfunction=(Q.nodes, np.append(np.abs(u), 0.0)))


# -- linear oracle ------------------------------------------------------------------------

def linear_cap_eigenvalue(geometry: CapGeometry, n: int = 2000, *, tol: float = 1e-12,
                          maxiter: int = 500) -> float:
    """First Dirichlet eigenvalue of ``-sin^{1-d} (sin^{d-1} u')'`` on ``(0, theta0)``.

    Vertex-centred finite volumes (exact cell volumes, midpoint fluxes,
    regular at the pole) and inverse power iteration on the symmetrised
    tridiagonal matrix.
    """
    if n < 64:
        raise DomainError(f"n must be at least 64, got {n!r}")
    d, t0 = geometry.d, geometry.theta0
    h = t0 / n
    nodes = np.arange(n) * h
    s_half = np.sin(nodes + 0.5 * h) ** (d - 1)
    lo_edge = np.maximum(nodes - 0.5 * h, 0.0)
    hi_edge = nodes + 0.5 * h
    xi, wq = np.polynomial.legendre.leggauss(8)
    mid, rad = 0.5 * (lo_edge + hi_edge), 0.5 * (hi_edge - lo_edge)
    vol = (rad[:, None] * wq[None, :] * np.sin(mid[:, None] + rad[:, None] * xi[None, :]) ** (d - 1)).sum(axis=1)

    diag = s_half / h
    diag[1:] += s_half[:-1] / h
    off = -s_half[:-1] / h
    scale = 1 / np.sqrt(vol)
    diag = diag * scale**2
    off = off * scale[:-1] * scale[1:]
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off

    y = np.sqrt(vol) * np.cos(np.pi * nodes / (2 * t0))
    y /= np.linalg.norm(y)
    lam = math.inf
    for _ in range(maxiter):
        x = solve_banded((1, 1), ab, y)
        y = x / np.linalg.norm(x)
        Ay = diag * y
        Ay[:-1] += off * y[1:]
        Ay[1:] += off * y[:-1]
        new = float(y @ Ay)
        if abs(new - lam) <= tol * new:
            return new
        lam = new
    raise ConvergenceError("inverse iteration did not converge")
