"""Numerical audit of the Pohozaev-type integral identity on spherical caps.

For a positive solution of the reaction problem vanishing on the cap
boundary and a test function ``phi`` of the polar angle,

    (1 - 1/p) int_{dS} |omega_nu|^p phi_nu
        = int (Lap phi / (q+1) - beta k phi) omega^{q+1}
          - (1/p) int Omega^p Lap phi
          + int Omega^{p-2} phi'' omega'^2
          + beta k int Omega^{p-2} omega'^2 phi
          - beta^2 k lambda int Omega^{p-2} omega^2 phi

with ``k = p beta + p - N`` and ``Lap`` the radial Laplace-Beltrami operator.
With ``phi = cos`` the right side collapses to
``A int omega^{q+1} phi + B int Omega^{p-2} omega'^2 phi + C int Omega^{p-2} omega^2 phi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bvp import ShootingOptions, scan_amplitudes
from .errors import DomainError, SignChangeError
from .ode import RadialProfile
from .params import PohozaevCoeffs, ProblemParams, pohozaev_coeffs
from .sphere import COS_THETA, CapGeometry, RadialTestFunction, WeightedGrid, make_weighted_grid

RESIDUAL_FLOOR = 1e-14


@dataclass
class PohozaevReport:
    lhs: float
    rhs_terms: tuple
    coeffs: PohozaevCoeffs | None
    abs_residual: float
    rel_residual: float
    grid_size: int
    phi_name: str = "cos"
    theta0: float = math.nan

    @property
    def rhs(self) -> float:
        return float(math.fsum(self.rhs_terms))

    @property
    def term_scale(self) -> float:
        return max([abs(self.lhs)] + [abs(t) for t in self.rhs_terms])

    @property
    def scaled_residual(self) -> float:
        """``abs_residual`` relative to the largest single term.

        Meaningful when both sides vanish, e.g. for ``phi = 1`` where the
        boundary term is zero.
        """
        s = self.term_scale
        return self.abs_residual / s if s > 0 else 0.0


@dataclass
class _Integrands:
    grid: WeightedGrid
    omega: np.ndarray
    domega: np.ndarray
    om_p2: np.ndarray         # Omega^{p-2}
    om_p: np.ndarray          # Omega^p
    w_q1: np.ndarray          # omega^{q+1}
    boundary_slope: float     # omega'(theta0)


def _check_profile(profile: RadialProfile, params: ProblemParams, geometry: CapGeometry):
    if params.epsilon != 1:
        raise DomainError("the identity is stated for the reaction problem (epsilon = +1)")
    if geometry.theta0 > math.pi / 2:
        raise DomainError(f"audit needs theta0 <= pi/2 (cos positive on the cap), got {geometry.theta0!r}")
    if profile.theta_end < geometry.theta0 * (1 - 1e-12) and profile.termination.kind != "hit_zero":
        raise DomainError("profile does not cover the cap")


def _integrands(profile: RadialProfile, params: ProblemParams, grid: WeightedGrid) -> _Integrands:
    nodes = grid.nodes
    if profile.amplitude == 0.0 and not np.any(profile.omega):
        z = np.zeros_like(nodes)
        return _Integrands(grid, z, z, z, z, z, 0.0)
    w, dw = profile.sample(nodes)
    w = np.maximum(w, 0.0)
    b, p, q = params.beta, params.p, params.q
    om2 = b * b * w * w + dw * dw
    with np.errstate(divide="ignore", invalid="ignore"):
        om_p2 = np.where(om2 > 0, om2 ** ((p - 2) / 2), 0.0)
    return _Integrands(grid, w, dw, om_p2, om_p2 * om2, w ** (q + 1), float(dw[-1]))


def _boundary_term(ig: _Integrands, p: float, dphi_boundary: float) -> float:
    return (1 - 1 / p) * ig.grid.boundary_integral(abs(ig.boundary_slope) ** p * dphi_boundary)


def _relative(lhs: float, terms, extra_scale: float = 0.0) -> tuple[float, float]:
    rhs = math.fsum(terms)
    err = abs(lhs - rhs)
    scale = max(abs(lhs), max((abs(t) for t in terms), default=0.0), extra_scale)
    denom = max(abs(lhs), abs(rhs), RESIDUAL_FLOOR * scale)
    return err, (err / denom if denom > 0 else 0.0)


def audit_grid(profile: RadialProfile, geometry: CapGeometry, n: int) -> WeightedGrid:
    """Simpson grid on the cap actually spanned by ``profile``.

    A shot that vanished at ``theta_z < theta0`` is an exact solution on the
    smaller cap of radius ``theta_z``, so that cap is used.
    """
    if profile.termination.kind == "hit_zero" and profile.theta_end < geometry.theta0:
        geometry = CapGeometry(geometry.d, profile.theta_end)
    return make_weighted_grid(geometry, n)


def audit_identity(profile: RadialProfile, params: ProblemParams | None = None,
                   geometry: CapGeometry | None = None, grid: WeightedGrid | int = 2000) -> PohozaevReport:
    """Both sides of the identity with ``phi = cos theta`` and coefficients ``A, B, C``.

    ``beta`` in the coefficients is ``params.beta`` (not necessarily ``beta_q``).
    """
    params = params or profile.params
    geometry = geometry or profile.geometry
    _check_profile(profile, params, geometry)
    if not isinstance(grid, WeightedGrid):
        grid = audit_grid(profile, geometry, int(grid))
    ig = _integrands(profile, params, grid)
    phi = np.cos(grid.nodes)
    co = pohozaev_coeffs(params)
    terms = (co.A * grid.cap_integral(ig.w_q1 * phi),
             co.B * grid.cap_integral(ig.om_p2 * ig.domega ** 2 * phi),
             co.C * grid.cap_integral(ig.om_p2 * ig.omega ** 2 * phi))
    lhs = _boundary_term(ig, params.p, -math.sin(grid.nodes[-1]))
    err, rel = _relative(lhs, terms)
    return PohozaevReport(lhs, terms, co, err, rel, len(grid), "cos", float(grid.nodes[-1]))


def _lap(phi: RadialTestFunction, nodes: np.ndarray, d: int) -> np.ndarray:
    out = np.empty_like(nodes)
    pole = nodes == 0.0
    out[pole] = d * phi.d2phi(0.0)
    th = nodes[~pole]
    out[~pole] = phi.d2phi(th) + (d - 1) * phi.dphi(th) / np.tan(th)
    return out


def audit_general_phi(profile: RadialProfile, phi: RadialTestFunction = COS_THETA,
                      params: ProblemParams | None = None, geometry: CapGeometry | None = None,
                      grid: WeightedGrid | int = 2000) -> PohozaevReport:
    """Both sides of the identity for an arbitrary radial test function.

    ``rhs_terms`` holds the five integrals in the order: source term,
    ``Omega^p Lap phi``, Hessian term, gradient term, zeroth-order term.
    """
    params = params or profile.params
    geometry = geometry or profile.geometry
    _check_profile(profile, params, geometry)
    if not isinstance(grid, WeightedGrid):
        grid = audit_grid(profile, geometry, int(grid))
    ig = _integrands(profile, params, grid)
    nodes = grid.nodes
    b, p, q = params.beta, params.p, params.q
    k = p * b + p - params.N
    ph = np.asarray(phi.phi(nodes), dtype=float) * np.ones_like(nodes)
    lap = _lap(phi, nodes, grid.geometry.d)
    hess = np.asarray(phi.d2phi(nodes), dtype=float) * np.ones_like(nodes)
    terms = (grid.cap_integral((lap / (q + 1) - b * k * ph) * ig.w_q1),
             -grid.cap_integral(ig.om_p * lap) / p,
             grid.cap_integral(ig.om_p2 * hess * ig.domega ** 2),
             b * k * grid.cap_integral(ig.om_p2 * ig.domega ** 2 * ph),
             -b * b * k * params.lam * grid.cap_integral(ig.om_p2 * ig.omega ** 2 * ph))
    lhs = _boundary_term(ig, p, float(phi.dphi(nodes[-1])))
    err, rel = _relative(lhs, terms)
    return PohozaevReport(lhs, terms, pohozaev_coeffs(params), err, rel, len(grid), phi.name, float(nodes[-1]))


def weak_form_balance(profile: RadialProfile, params: ProblemParams | None = None,
                      grid: WeightedGrid | int = 2000) -> tuple[float, float]:
    """``int Omega^{p-2} omega'^2 - beta lambda int Omega^{p-2} omega^2 - int omega^{q+1}``.

    Returns ``(absolute, relative)``; zero for a solution (test with ``omega``).
    """
    params = params or profile.params
    if not isinstance(grid, WeightedGrid):
        grid = audit_grid(profile, profile.geometry, int(grid))
    ig = _integrands(profile, params, grid)
    terms = (grid.cap_integral(ig.om_p2 * ig.domega ** 2),
             -params.beta * params.lam * grid.cap_integral(ig.om_p2 * ig.omega ** 2),
             -params.epsilon * grid.cap_integral(ig.w_q1))
    err = abs(math.fsum(terms))
    scale = max(abs(t) for t in terms)
    return err, (err / scale if scale > 0 else 0.0)


def observed_order(sizes, residuals) -> float:
    """Least-squares slope of ``-log(residual)`` against ``log(n)``."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(residuals, dtype=float))
    return float(-np.polyfit(x, y, 1)[0])


def refinement_study(profile: RadialProfile, sizes=(32, 64, 128, 256), phi: RadialTestFunction | None = None
                     ) -> tuple[list[PohozaevReport], float]:
    """Audit on successively refined grids; returns the reports and the observed order."""
    if phi is None:
        reports = [audit_identity(profile, grid=n) for n in sizes]
    else:
        reports = [audit_general_phi(profile, phi, grid=n) for n in sizes]
    return reports, observed_order([r.grid_size - 1 for r in reports], [r.rel_residual for r in reports])


# -- sufficient conditions on phi ----------------------------------------------------------------

@dataclass
class PhiConditionReport:
    e9_min: float
    e10_min: float
    e11_min: float
    nodes: np.ndarray = field(repr=False)
    e9: np.ndarray = field(repr=False)
    e10: np.ndarray = field(repr=False)
    e11: np.ndarray = field(repr=False)

    @property
    def minima(self) -> tuple[float, float, float]:
        return self.e9_min, self.e10_min, self.e11_min

    @property
    def all_nonnegative(self) -> bool:
        return min(self.minima) >= 0


def check_phi_conditions(phi: RadialTestFunction, params: ProblemParams, geometry: CapGeometry,
                         grid: WeightedGrid | int = 2000) -> PhiConditionReport:
    """Pointwise minima of the three sign conditions on ``0 <= theta < theta0``.

    For radial ``phi`` the Hessian has principal values ``phi''`` (radial) and
    ``cot(theta) phi'`` (tangential); the directional condition uses the
    smaller one.
    """
    if not isinstance(grid, WeightedGrid):
        grid = make_weighted_grid(geometry, int(grid))
    nodes = grid.nodes[:-1]
    ph = np.asarray(phi.phi(nodes), dtype=float) * np.ones_like(nodes)
    if np.any(ph <= 0):
        raise DomainError("phi must be positive on the open cap")
    d = geometry.d
    b, p, q, N = params.beta, params.p, params.q, params.N
    k = p * b + p - N
    lap = _lap(phi, nodes, d)
    rad = np.asarray(phi.d2phi(nodes), dtype=float) * np.ones_like(nodes)
    tang = np.empty_like(nodes)
    pole = nodes == 0.0
    tang[pole] = phi.d2phi(0.0)
    tang[~pole] = phi.dphi(nodes[~pole]) / np.tan(nodes[~pole])
    e9 = lap / ((q + 1) * ph) - b * k
    e10 = (p * np.minimum(rad, tang) - lap) / (p * ph) + b * k
    e11 = -lap / (p * ph) - k * ((p - 1) * b + p - N)
    return PhiConditionReport(float(e9.min()), float(e10.min()), float(e11.min()), nodes, e9, e10, e11)


# -- nonexistence at the critical exponent --------------------------------------------------------

@dataclass
class NonexistenceReport:
    amplitudes: np.ndarray = field(repr=False)
    misses: np.ndarray = field(repr=False)
    sign_change: bool
    bracket: tuple | None
    coeffs: PohozaevCoeffs
    certificate: bool                 # A = B = C = 0 to 1e-12

    @property
    def anomaly(self) -> bool:
        return self.sign_change


def nonexistence_probe(params: ProblemParams, geometry: CapGeometry, amplitudes=None, *,
                       options: ShootingOptions | None = None, strict: bool = False,
                       coeff_tol: float = 1e-12) -> NonexistenceReport:
    """Dense amplitude scan at ``q = q_c`` on a starshaped cap.

    A sign change of the miss function would be a positive solution, which
    cannot exist here; it is flagged as an anomaly (raised if ``strict``).
    """
    p, N = params.p, params.N
    if not 1 < p < N - 1:
        raise DomainError(f"probe needs 1 < p < N-1 (finite q_c), got p={p!r}, N={N!r}")
    if params.epsilon != 1:
        raise DomainError("probe concerns the reaction problem (epsilon = +1)")
    if abs(params.q - params.q_c) > 1e-12 * params.q_c:
        raise DomainError(f"probe needs q = q_c = {params.q_c!r}, got {params.q!r}")
    if geometry.theta0 > math.pi / 2:
        raise DomainError("probe needs a cap inside the half sphere (theta0 <= pi/2)")
    scan = scan_amplitudes(params, geometry, options, amplitudes)
    ks = scan.sign_changes()
    co = pohozaev_coeffs(params)
    cert = all(abs(c) <= coeff_tol for c in co.as_tuple())
    bracket = (float(scan.amplitudes[ks[0]]), float(scan.amplitudes[ks[0] + 1])) if ks else None
    if ks:
        msg = f"miss function changes sign on {bracket!r} at q = q_c; numerical anomaly"
        if strict:
            raise SignChangeError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return NonexistenceReport(scan.amplitudes, scan.misses, bool(ks), bracket, co, cert)
