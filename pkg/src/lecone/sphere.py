"""Spherical caps, radial operators on S^d and cap quadrature.

A cap ``S(theta0)`` is the geodesic ball of radius ``theta0`` about the north
pole of ``S^d``.  For a function of the polar angle alone

    int_S f dsigma = sigma_{d-1} * int_0^theta0 f(theta) sin^{d-1}(theta) dtheta,

and the boundary integral is ``sigma_{d-1} sin^{d-1}(theta0) f(theta0)``.  The
factor ``sigma_{d-1}`` (area of the unit ``S^{d-1}``) is kept explicitly.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class CapGeometry:
    d: int
    theta0: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"sphere dimension d must be an integer >= 2, got {self.d!r}")
        if not 0 < self.theta0 < math.pi:
            raise DomainError(f"theta0 must lie in (0, pi), got {self.theta0!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "theta0", float(self.theta0))

    @classmethod
    def for_dimension(cls, N: int, theta0: float) -> "CapGeometry":
        """Cap in the unit sphere of ``R^N``."""
        return cls(d=N - 1, theta0=theta0)

    @property
    def N(self) -> int:
        return self.d + 1

    @property
    def in_half_sphere(self) -> bool:
        """Cap is starshaped in the half sphere (``cos`` is a valid test function)."""
        return self.theta0 <= math.pi / 2


def surface_area_unit_sphere(m: int) -> float:
    """Area of the unit sphere ``S^{m-1}`` in ``R^m``: ``2 pi^{m/2} / Gamma(m/2)``."""
    if int(m) != m or m < 1:
        raise DomainError(f"m must be an integer >= 1, got {m!r}")
    return 2 * math.pi ** (m / 2) / math.gamma(m / 2)


@dataclass(frozen=True)
class RadialTestFunction:
    """A function of the polar angle with analytic first and second derivatives."""

    phi: Callable
    dphi: Callable
    d2phi: Callable
    name: str = "custom"

    def __call__(self, theta):
        return self.phi(theta)


COS_THETA = RadialTestFunction(np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), name="cos")
CONSTANT_ONE = RadialTestFunction(
    lambda t: np.ones_like(np.asarray(t, dtype=float)),
    lambda t: np.zeros_like(np.asarray(t, dtype=float)),
    lambda t: np.zeros_like(np.asarray(t, dtype=float)),
    name="one",
)


def laplace_beltrami_radial(phi: RadialTestFunction, theta, d: int):
    """``phi'' + (d-1) cot(theta) phi'`` for ``0 < theta < pi``.

    The operator is singular at the poles; use :func:`laplace_beltrami_pole`
    there.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0) or np.any(th >= math.pi):
        raise DomainError("laplace_beltrami_radial is singular at theta in {0, pi}")
    out = phi.d2phi(th) + (d - 1) * phi.dphi(th) / np.tan(th)
    return float(out) if np.ndim(out) == 0 else out


def laplace_beltrami_pole(phi: RadialTestFunction, d: int) -> float:
    """Limit of the radial Laplace-Beltrami operator at ``theta = 0`` (even ``phi``)."""
    return float(d * phi.d2phi(0.0))


@dataclass(frozen=True)
class WeightedGrid:
    """Composite Simpson rule for ``int f(theta) sin^{d-1}(theta) dtheta``.

    ``nodes`` are uniform and include both endpoints; ``weights`` already
    contain ``sin^{d-1}``.  ``surface_factor`` is ``sigma_{d-1}``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    surface_factor: float
    geometry: CapGeometry = field(repr=False)

    def __len__(self):
        return len(self.nodes)

    @property
    def intervals(self) -> int:
        return len(self.nodes) - 1

    def integral(self, values) -> float:
        """Weighted integral without the ``sigma_{d-1}`` factor."""
        return float(np.dot(self.weights, values))

    def cap_integral(self, values) -> float:
        """Integral over the cap with respect to the sphere measure."""
        return self.surface_factor * self.integral(values)

    def boundary_integral(self, value_at_theta0: float) -> float:
        """Integral over the parallel ``theta = theta0`` of a constant value."""
        d, t0 = self.geometry.d, self.geometry.theta0
        return self.surface_factor * math.sin(t0) ** (d - 1) * value_at_theta0


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights on ``n`` (even) uniform intervals."""
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def make_weighted_grid(geometry: CapGeometry, n: int, theta_min: float = 0.0) -> WeightedGrid:
    """Uniform composite Simpson grid on ``[theta_min, theta0]``.

    ``n`` is the number of subintervals; odd values are rounded up to the
    next even number.  The grid has ``n + 1`` nodes.
    """
    if n < 16:
        raise DomainError(f"grid needs n >= 16 intervals, got {n!r}")
    if not 0 <= theta_min < geometry.theta0:
        raise DomainError(f"theta_min must lie in [0, theta0), got {theta_min!r}")
    n = int(n) + (int(n) % 2)
    nodes = np.linspace(theta_min, geometry.theta0, n + 1)
    h = (geometry.theta0 - theta_min) / n
    weights = simpson_weights(n, h) * np.sin(nodes) ** (geometry.d - 1)
    return WeightedGrid(nodes, weights, surface_area_unit_sphere(geometry.d), geometry)
