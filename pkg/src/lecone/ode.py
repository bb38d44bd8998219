"""Radial reduction of the equations on a cap to a singular IVP in theta.

For a profile ``omega(theta)`` on a cap of ``S^d`` both the Lane-Emden
problem and the spectral problem read

    -(sin^{d-1} Omega^{p-2} omega')' / sin^{d-1} - beta K Omega^{p-2} omega = R(omega)

with ``Omega^2 = beta^2 omega^2 + omega'^2``.  In Lane-Emden mode
``K = lambda(beta)`` and ``R = eps omega^q``; in spectral mode ``K = Lambda``
and ``R = 0``.  Expanding the divergence gives the normal form

    omega'' = -[(p-2) beta^2 omega omega'^2
                + Omega^2 ((d-1) cot(theta) omega' + beta K omega)
                + R Omega^{4-p}] / (beta^2 omega^2 + (p-1) omega'^2).

The pole ``theta = 0`` is a regular singular point; integration starts at a
small ``h`` from the even Taylor expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, IntegrationError, SingularDenominatorError
from .params import ProblemParams
from .sphere import CapGeometry


@dataclass(frozen=True)
class LaneEmden:
    """Mode ``K = lambda(beta)``, ``R(omega) = eps omega^q``."""

    def __str__(self):
        return "lane_emden"


@dataclass(frozen=True)
class Spectral:
    """Mode ``K = Lambda``, ``R = 0`` (homogeneous of degree ``p-1``)."""

    Lambda: float

    def __str__(self):
        return f"spectral(Lambda={self.Lambda!r})"


LANE_EMDEN = LaneEmden()


@dataclass(frozen=True)
class RadialState:
    theta: float
    omega: float
    domega: float


def big_omega(beta: float, omega: float, domega: float) -> float:
    return math.sqrt(beta * beta * omega * omega + domega * domega)


@dataclass(frozen=True)
class RadialCoefficients:
    """Scalars entering the normal form; ``eps = 0`` in spectral mode."""

    p: float
    beta: float
    d: int
    K: float
    eps: float
    q: float

    @classmethod
    def build(cls, params: ProblemParams, geometry: CapGeometry, mode) -> "RadialCoefficients":
        if geometry.d != params.d:
            raise DomainError(f"geometry has d={geometry.d} but params have N-1={params.d}")
        if isinstance(mode, Spectral):
            return cls(params.p, params.beta, geometry.d, mode.Lambda, 0.0, params.q)
        if isinstance(mode, LaneEmden):
            return cls(params.p, params.beta, geometry.d, params.lam, float(params.epsilon), params.q)
        raise DomainError(f"unknown mode {mode!r}")

    def source(self, omega: float) -> float:
        if self.eps == 0.0:
            return 0.0
        return self.eps * math.copysign(abs(omega) ** self.q, omega)

    def pole_curvature(self, a: float) -> float:
        """``omega''(0)`` for ``omega(0) = a``, ``omega'(0) = 0``."""
        return -(self.beta * self.K * a + self.source(a) * (self.beta * a) ** (2 - self.p)) / self.d

    def second_derivative(self, theta: float, w: float, dw: float, tol: float = 0.0) -> float:
        p, b = self.p, self.beta
        b2w2 = b * b * w * w
        dw2 = dw * dw
        den = b2w2 + (p - 1) * dw2
        if den <= tol:
            raise SingularDenominatorError(f"degenerate normal form at theta={theta!r}")
        om2 = b2w2 + dw2
        num = (p - 2) * b * b * w * dw2 + om2 * ((self.d - 1) * dw / math.tan(theta) + b * self.K * w)
        r = self.source(w)
        if r != 0.0:
            num += r * om2 ** (2 - p / 2)
        return -num / den

    def second_derivative_array(self, theta, w, dw):
        """Vectorised normal form; ``theta = 0`` entries use the pole limit."""
        theta, w, dw = (np.asarray(x, dtype=float) for x in (theta, w, dw))
        p, b = self.p, self.beta
        out = np.empty_like(theta)
        pole = theta == 0
        if np.any(pole):
            out[pole] = [self.pole_curvature(a) for a in w[pole]]
        m = ~pole
        th, ww, dd = theta[m], w[m], dw[m]
        om2 = b * b * ww * ww + dd * dd
        den = b * b * ww * ww + (p - 1) * dd * dd
        num = (p - 2) * b * b * ww * dd * dd + om2 * ((self.d - 1) * dd / np.tan(th) + b * self.K * ww)
        if self.eps != 0.0:
            src = self.eps * np.sign(ww) * np.abs(ww) ** self.q
            num = num + src * om2 ** (2 - p / 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[m] = -num / den
        return out


def radial_second_derivative(state: RadialState, params: ProblemParams, geometry: CapGeometry, mode=LANE_EMDEN,
                             tol: float = 0.0) -> float:
    """``omega''`` from the normal form at an interior state."""
    if not 0 < state.theta < math.pi:
        raise DomainError("theta must lie strictly between the poles")
    return RadialCoefficients.build(params, geometry, mode).second_derivative(
        state.theta, state.omega, state.domega, tol)


def default_pole_offset(geometry: CapGeometry, amplitude: float | None = None, curvature: float = 0.0) -> float:
    """Start offset from the pole.

    Shrunk below ``1e-5 theta0`` when the pole curvature is large, so that the
    quadratic start changes ``omega`` by at most ``5e-7`` relative.
    """
    h = max(1e-6, geometry.theta0 * 1e-5)
    if amplitude is not None and curvature != 0.0:
        h = min(h, math.sqrt(1e-6 * amplitude / abs(curvature)))
    return h


def pole_start(a: float, params: ProblemParams, geometry: CapGeometry, h: float | None = None,
               mode=LANE_EMDEN) -> RadialState:
    """State at ``theta = h`` from ``omega = a + omega''(0) theta^2 / 2``."""
    if not a > 0:
        raise DomainError(f"amplitude must be positive, got {a!r}")
    c = RadialCoefficients.build(params, geometry, mode).pole_curvature(a)
    h = default_pole_offset(geometry, a, c) if h is None else h
    return RadialState(h, a + 0.5 * c * h * h, c * h)


@dataclass(frozen=True)
class IntegrationOptions:
    rtol: float = 1e-10
    atol_factor: float = 1e-3    # atol = atol_factor * rtol * amplitude
    overflow: float = 1e12
    h: float | None = None
    method: str = "DOP853"

    def with_rtol(self, rtol: float) -> "IntegrationOptions":
        return replace(self, rtol=rtol)


@dataclass(frozen=True)
class Termination:
    kind: str                 # reached_theta0 | hit_zero | blew_up
    theta: float

    def __str__(self):
        return f"{self.kind}({self.theta:.17g})"


@dataclass
class RadialProfile:
    """Discrete radial solution with its integration metadata.

    ``theta[0] == 0`` always holds; the first integrated node is
    ``theta_start``.  Between nodes the profile is evaluated from the
    integrator's dense output when available, otherwise by cubic Hermite
    interpolation using the normal form for ``omega''``.
    """

    theta: np.ndarray
    omega: np.ndarray
    domega: np.ndarray
    amplitude: float
    termination: Termination
    params: ProblemParams
    geometry: CapGeometry
    mode: object = LANE_EMDEN
    pole_curvature: float = 0.0
    theta_start: float = 0.0
    dense: Callable | None = field(default=None, repr=False)
    nfev: int = 0
    _hermite: tuple | None = field(default=None, repr=False)

    @property
    def theta_end(self) -> float:
        return float(self.theta[-1])

    @property
    def coefficients(self) -> RadialCoefficients:
        return RadialCoefficients.build(self.params, self.geometry, self.mode)

    def _hermite_splines(self):
        if self._hermite is None:
            d2 = self.coefficients.second_derivative_array(self.theta, self.omega, self.domega)
            self._hermite = (CubicHermiteSpline(self.theta, self.omega, self.domega),
                             CubicHermiteSpline(self.theta, self.domega, d2))
        return self._hermite

    def sample(self, theta):
        """Return ``(omega, omega')`` at the requested angles."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        w = np.empty_like(th)
        dw = np.empty_like(th)
        near = th < self.theta_start
        if np.any(near):
            c = self.pole_curvature
            w[near] = self.amplitude + 0.5 * c * th[near] ** 2
            dw[near] = c * th[near]
        far = ~near
        if np.any(far):
            if self.dense is not None:
                y = self.dense(th[far])
                w[far], dw[far] = y[0], y[1]
            else:
                sw, sdw = self._hermite_splines()
                w[far], dw[far] = sw(th[far]), sdw(th[far])
        if np.ndim(theta) == 0:
            return float(w[0]), float(dw[0])
        return w, dw

    def is_positive(self) -> bool:
        """Strict positivity on all nodes before the terminal one."""
        return bool(np.all(self.omega[:-1] > 0))

    def min_denominator(self) -> float:
        """Smallest ``beta^2 omega^2 + (p-1) omega'^2`` over nodes with ``omega > 0``."""
        b, p = self.params.beta, self.params.p
        alive = self.omega > 0
        den = b * b * self.omega[alive] ** 2 + (p - 1) * self.domega[alive] ** 2
        return float(den.min()) if den.size else 0.0

    def scaled(self, t: float) -> "RadialProfile":
        """Pointwise multiple ``t * omega``; only exact for spectral mode."""
        dense = None
        if self.dense is not None:
            base = self.dense
            dense = lambda th: t * base(th)  # noqa: E731
        return replace(self, omega=t * self.omega, domega=t * self.domega, amplitude=t * self.amplitude,
                       pole_curvature=t * self.pole_curvature, dense=dense, _hermite=None)


def profile_from_arrays(theta, omega, domega, params: ProblemParams, geometry: CapGeometry, mode=LANE_EMDEN,
                        termination: Termination | None = None) -> RadialProfile:
    """Wrap tabulated values (e.g. a stored CSV or an analytic profile)."""
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    domega = np.asarray(domega, dtype=float)
    if theta[0] != 0.0:
        raise DomainError("tabulated profiles must start at the pole theta=0")
    coeffs = RadialCoefficients.build(params, geometry, mode)
    term = termination or Termination("reached_theta0", float(theta[-1]))
    return RadialProfile(theta, omega, domega, float(omega[0]), term, params, geometry, mode,
                         pole_curvature=coeffs.pole_curvature(float(omega[0])) if omega[0] > 0 else 0.0)


def integrate_radial(a: float, params: ProblemParams, geometry: CapGeometry, mode=LANE_EMDEN,
                     options: IntegrationOptions | None = None) -> RadialProfile:
    """Shoot from the pole with ``omega(0) = a`` up to ``theta0``.

    Stops at the first zero of ``omega`` (``hit_zero``) or when ``|omega|`` or
    ``|omega'|`` exceeds the overflow guard (``blew_up``).
    """
    opts = options or IntegrationOptions()
    coeffs = RadialCoefficients.build(params, geometry, mode)
    h = default_pole_offset(geometry, a, coeffs.pole_curvature(a)) if opts.h is None else opts.h
    if not 0 < h < geometry.theta0:
        raise DomainError(f"pole offset h={h!r} must lie in (0, theta0)")
    start = pole_start(a, params, geometry, h, mode)
    second = coeffs.second_derivative
    guard = opts.overflow

    def rhs(t, y):
        return [y[1], second(t, y[0], y[1])]

    def zero(t, y):
        return y[0]

    zero.terminal = True
    zero.direction = -1

    def overflow(t, y):
        return guard - max(abs(y[0]), abs(y[1]))

    overflow.terminal = True

    try:
        sol = solve_ivp(rhs, (h, geometry.theta0), [start.omega, start.domega], method=opts.method,
                        rtol=opts.rtol, atol=opts.atol_factor * opts.rtol * a, events=(zero, overflow),
                        dense_output=True)
    except SingularDenominatorError as exc:
        raise IntegrationError(str(exc)) from exc
    if sol.status < 0:
        last = RadialState(float(sol.t[-1]), float(sol.y[0, -1]), float(sol.y[1, -1]))
        raise IntegrationError(f"integration failed: {sol.message}", last_state=last)

    if sol.status == 1 and sol.t_events[0].size:
        term = Termination("hit_zero", float(sol.t_events[0][0]))
    elif sol.status == 1:
        term = Termination("blew_up", float(sol.t_events[1][0]))
    else:
        term = Termination("reached_theta0", float(sol.t[-1]))

    theta = np.concatenate(([0.0], sol.t))
    omega = np.concatenate(([a], sol.y[0]))
    domega = np.concatenate(([0.0], sol.y[1]))
    if term.kind == "hit_zero":
        omega[-1] = 0.0
    return RadialProfile(theta, omega, domega, float(a), term, params, geometry, mode,
                         pole_curvature=coeffs.pole_curvature(a), theta_start=h, dense=sol.sol, nfev=sol.nfev)


def divergence_residual(profile: RadialProfile, n: int = 2000, *, relative: bool = False) -> float:
    """Max residual of the divergence-form equation on ``n`` uniform intervals.

    The divergence ``(sin^{d-1} G)' / sin^{d-1}`` with ``G = Omega^{p-2} omega'``
    is evaluated as ``G' + (d-1) cot(theta) G`` with a centred difference for
    ``G'``; differencing the full flux loses accuracy next to the pole when
    ``d >= 3``.  With ``relative`` the residual is divided by the largest
    magnitude of the individual terms.
    """
    c = profile.coefficients
    theta = np.linspace(0.0, profile.theta_end, n + 1)
    w, dw = profile.sample(theta)
    om2 = c.beta**2 * w * w + dw * dw
    with np.errstate(divide="ignore", invalid="ignore"):
        om_p2 = np.where(om2 > 0, om2 ** ((c.p - 2) / 2), 0.0)
    G = om_p2 * dw
    hstep = theta[1] - theta[0]
    inner = slice(1, n)
    dG = (G[2:] - G[:-2]) / (2 * hstep)
    th = theta[inner]
    src = 0.0
    if c.eps != 0.0:
        src = c.eps * np.sign(w[inner]) * np.abs(w[inner]) ** c.q
    flux = dG + (c.d - 1) * G[inner] / np.tan(th)
    zeroth = c.beta * c.K * om_p2[inner] * w[inner]
    res = -flux - zeroth - src
    if relative:
        scale = max(np.max(np.abs(dG)), np.max(np.abs((c.d - 1) * G[inner] / np.tan(th))),
                    np.max(np.abs(zeroth)), np.max(np.abs(src)) if np.ndim(src) else 0.0)
        return float(np.max(np.abs(res)) / scale) if scale > 0 else 0.0
    return float(np.max(np.abs(res)))
