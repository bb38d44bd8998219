"""Bracketed scalar root refinement that keeps its final bracket."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BracketError, ConvergenceError


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float
    evaluations: int

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def best(self) -> tuple[float, float]:
        """Endpoint with the smaller ``|f|``."""
        return (self.lo, self.f_lo) if abs(self.f_lo) <= abs(self.f_hi) else (self.hi, self.f_hi)

    def nonnegative(self) -> tuple[float, float]:
        """Endpoint on the ``f >= 0`` side."""
        return (self.lo, self.f_lo) if self.f_lo >= 0 else (self.hi, self.f_hi)


def _sign(v: float) -> int:
    return int(v > 0) - int(v < 0)


def refine(f, lo: float, hi: float, f_lo: float | None = None, f_hi: float | None = None, *,
           xtol: float, ftol: float = 0.0, maxiter: int = 200) -> Bracket:
    """Shrink ``[lo, hi]`` around a sign change of ``f`` until ``hi - lo <= xtol``.

    Illinois-modified false position with a bisection fallback whenever the
    interpolated point stalls or ``f`` returns a large sentinel.  Iteration
    also stops once an endpoint satisfies ``|f| <= ftol`` (if ``ftol > 0``).
    """
    if lo > hi:
        lo, hi, f_lo, f_hi = hi, lo, f_hi, f_lo
    evals = 0
    if f_lo is None:
        f_lo = f(lo)
        evals += 1
    if f_hi is None:
        f_hi = f(hi)
        evals += 1
    if _sign(f_lo) * _sign(f_hi) > 0:
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]", window=(lo, hi), last_bracket=(f_lo, f_hi))
    if f_lo == 0:
        return Bracket(lo, lo, f_lo, f_lo, evals)
    if f_hi == 0:
        return Bracket(hi, hi, f_hi, f_hi, evals)

    g_lo, g_hi = f_lo, f_hi     # Illinois-weighted values
    side = 0
    width_before = hi - lo
    for it in range(maxiter):
        width = hi - lo
        if width <= xtol:
            break
        if ftol > 0 and min(abs(f_lo), abs(f_hi)) <= ftol:
            break
        x = hi - g_hi * (hi - lo) / (g_hi - g_lo) if math.isfinite(g_hi - g_lo) and g_hi != g_lo else math.nan
        if not (lo < x < hi) or it % 4 == 3 and width > 0.5 * width_before:
            x = 0.5 * (lo + hi)
            width_before = width
        margin = 0.25 * xtol
        x = min(max(x, lo + margin), hi - margin)
        fx = f(x)
        evals += 1
        if fx == 0:
            return Bracket(x, x, fx, fx, evals)
        if _sign(fx) == _sign(f_lo):
            lo, f_lo, g_lo = x, fx, fx
            if side == -1:
                g_hi *= 0.5
            side = -1
        else:
            hi, f_hi, g_hi = x, fx, fx
            if side == 1:
                g_lo *= 0.5
            side = 1
    else:
        raise ConvergenceError(f"root refinement did not converge in {maxiter} steps; bracket [{lo!r}, {hi!r}]")
    return Bracket(lo, hi, f_lo, f_hi, evals)
