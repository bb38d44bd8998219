"""Amplitude shooting for the source (eps=+1) and absorption (eps=-1) problems.

A shot from the pole with ``omega(0) = a`` produces a signed miss:
``omega(theta0)`` if it survives to the boundary, ``theta_zero - theta0`` if it
vanishes early, and :data:`BLOWUP_MISS` if it overflows.  A positive solution
vanishing on the boundary is a sign change of ``a -> miss(a)``.
"""

from __future__ import annotations

import concurrent.futures as cf
import math
import warnings
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .errors import (ContinuationError, ConvergenceError, DomainError, LeconeError, MultiplicityError,
                     NoBracketError)
from .ode import IntegrationOptions, RadialProfile, integrate_radial
from .params import ProblemParams, q_from_beta
from .roots import refine
from .spectral import cached_beta_S
from .sphere import CapGeometry

BLOWUP_MISS = 1e12


@dataclass(frozen=True)
class ShootingOptions:
    a_min: float = 1e-3
    a_max: float = 1e3
    n_scan: int = 200
    root_ftol: float = 1e-9         # accept when |miss| <= root_ftol * a
    root_xtol: float = 1e-14        # relative bracket width
    multistart: int = 10
    uniqueness_tol: float = 1e-6
    check_hypotheses: bool = True
    integration: IntegrationOptions = field(default_factory=IntegrationOptions)

    def amplitudes(self) -> np.ndarray:
        return np.geomspace(self.a_min, self.a_max, self.n_scan)


@dataclass
class ShootingRecord:
    amplitude: float
    miss: float
    profile: RadialProfile = field(repr=False)


def miss_function(a: float, params: ProblemParams, geometry: CapGeometry,
                  options: ShootingOptions | None = None) -> ShootingRecord:
    opts = options or ShootingOptions()
    prof = integrate_radial(a, params, geometry, options=opts.integration)
    kind = prof.termination.kind
    if kind == "hit_zero":
        miss = prof.termination.theta - geometry.theta0
    elif kind == "blew_up":
        miss = BLOWUP_MISS
    else:
        miss = float(prof.omega[-1])
    return ShootingRecord(float(a), float(miss), prof)


@dataclass
class AmplitudeScan:
    amplitudes: np.ndarray
    misses: np.ndarray

    def sign_changes(self) -> list[int]:
        """Indices ``k`` with a sign change between ``a_k`` and ``a_{k+1}``."""
        s = np.sign(self.misses)
        return [k for k in range(len(s) - 1) if s[k] * s[k + 1] < 0 or s[k] == 0]

    def brackets(self) -> list[tuple[float, float]]:
        return [(float(self.amplitudes[k]), float(self.amplitudes[k + 1])) for k in self.sign_changes()]


def scan_amplitudes(params: ProblemParams, geometry: CapGeometry, options: ShootingOptions | None = None,
                    amplitudes=None) -> AmplitudeScan:
    opts = options or ShootingOptions()
    amps = opts.amplitudes() if amplitudes is None else np.asarray(amplitudes, dtype=float)
    misses = np.array([miss_function(a, params, geometry, opts).miss for a in amps])
    return AmplitudeScan(amps, misses)


@dataclass
class ShootingSolution:
    profile: RadialProfile = field(repr=False)
    amplitude: float
    miss: float
    brackets: list
    roots: list
    unique: bool | None = None
    scan: AmplitudeScan | None = field(default=None, repr=False)
    evaluations: int = 0


def _root_in(params, geometry, opts, lo, hi, f_lo=None, f_hi=None) -> ShootingRecord:
    def f(a):
        return miss_function(a, params, geometry, opts).miss

    br = refine(f, lo, hi, f_lo, f_hi, xtol=opts.root_xtol * hi)
    a, m = br.nonnegative()
    if abs(m) > opts.root_ftol * a:
        a_alt, m_alt = br.best()
        if abs(m_alt) > opts.root_ftol * a_alt:
            raise ConvergenceError(f"miss did not vanish in [{br.lo!r}, {br.hi!r}] "
                                   f"(|miss|={min(abs(br.f_lo), abs(br.f_hi))!r}); likely a jump, not a root")
        a = a_alt
    rec = miss_function(a, params, geometry, opts)
    rec.profile.nfev = br.evaluations
    return rec


def _warn(msg):
    warnings.warn(msg, RuntimeWarning, stacklevel=3)


def solve_source(params: ProblemParams, geometry: CapGeometry, options: ShootingOptions | None = None, *,
                 beta_s: float | None = None) -> ShootingSolution:
    """Positive solution of the reaction problem by amplitude shooting.

    Scans ``a`` on a log grid, refines the smallest-amplitude sign change and
    records every bracket found.  Raises :class:`NoBracketError` when the
    miss keeps one sign.
    """
    opts = options or ShootingOptions()
    if params.epsilon != 1:
        raise DomainError("solve_source needs epsilon = +1")
    if opts.check_hypotheses:
        if params.q >= params.q_c:
            _warn(f"q={params.q!r} >= q_c={params.q_c!r}: outside the existence range")
        bs = beta_s if beta_s is not None else cached_beta_S(params.p, geometry)
        if params.beta >= bs:
            _warn(f"beta={params.beta!r} >= beta_S={bs!r}: no positive solution expected")
    scan = scan_amplitudes(params, geometry, opts)
    ks = scan.sign_changes()
    if not ks:
        raise NoBracketError("miss function keeps one sign on the amplitude scan", scan.amplitudes, scan.misses)
    k = ks[0]
    rec = _root_in(params, geometry, opts, scan.amplitudes[k], scan.amplitudes[k + 1],
                   scan.misses[k], scan.misses[k + 1])
    return ShootingSolution(rec.profile, rec.amplitude, rec.miss, scan.brackets(), [rec.amplitude],
                            unique=None if len(ks) > 1 else True, scan=scan,
                            evaluations=len(scan.amplitudes) + rec.profile.nfev)


def _multistart_brackets(scan: AmplitudeScan, k: int, count: int) -> list[tuple[int, int]]:
    n = len(scan.amplitudes)
    pairs = []
    for w in range(0, n):
        for i in range(w + 1):
            lo, hi = k - i, k + 1 + (w - i)
            if lo >= 0 and hi < n and (lo, hi) not in pairs:
                pairs.append((lo, hi))
            if len(pairs) >= count:
                return pairs
    return pairs


def profile_distance(a: RadialProfile, b: RadialProfile, n: int = 2000) -> float:
    """Sup-distance of two profiles on a common uniform grid."""
    end = min(a.theta_end, b.theta_end)
    th = np.linspace(0.0, end, n + 1)
    return float(np.max(np.abs(a.sample(th)[0] - b.sample(th)[0])))


def solve_absorption(params: ProblemParams, geometry: CapGeometry, options: ShootingOptions | None = None, *,
                     beta_s: float | None = None, multistart: bool = True) -> ShootingSolution:
    """Positive solution of the absorption problem with an empirical uniqueness check.

    The root is refined from ``options.multistart`` different initial
    brackets; all resulting profiles must agree within
    ``options.uniqueness_tol`` in sup norm.  More than one sign change, or
    disagreeing multistart roots, raise :class:`MultiplicityError`.
    """
    opts = options or ShootingOptions()
    if params.epsilon != -1:
        raise DomainError("solve_absorption needs epsilon = -1")
    if opts.check_hypotheses:
        bs = beta_s if beta_s is not None else cached_beta_S(params.p, geometry)
        if params.beta <= bs:
            _warn(f"beta={params.beta!r} <= beta_S={bs!r}: no positive solution expected")
    scan = scan_amplitudes(params, geometry, opts)
    ks = scan.sign_changes()
    if not ks:
        raise NoBracketError("miss function keeps one sign on the amplitude scan", scan.amplitudes, scan.misses)
    if len(ks) > 1:
        roots = [_root_in(params, geometry, opts, scan.amplitudes[k], scan.amplitudes[k + 1]).amplitude for k in ks]
        raise MultiplicityError(f"{len(ks)} sign changes of the miss function; roots {roots!r}", roots)
    k = ks[0]
    pairs = _multistart_brackets(scan, k, opts.multistart if multistart else 1)
    records = [_root_in(params, geometry, opts, scan.amplitudes[i], scan.amplitudes[j], scan.misses[i],
                        scan.misses[j]) for i, j in pairs]
    spread = max((profile_distance(r.profile, s.profile) for r, s in combinations(records, 2)), default=0.0)
    if spread >= opts.uniqueness_tol:
        raise MultiplicityError(f"multistart roots disagree (sup distance {spread!r})",
                                [r.amplitude for r in records])
    best = records[0]
    return ShootingSolution(best.profile, best.amplitude, best.miss, scan.brackets(),
                            [r.amplitude for r in records], unique=True, scan=scan,
                            evaluations=len(scan.amplitudes) + sum(r.profile.nfev for r in records))


def solve(params: ProblemParams, geometry: CapGeometry, options: ShootingOptions | None = None,
          **kwargs) -> ShootingSolution:
    if params.epsilon == 1:
        return solve_source(params, geometry, options, **kwargs)
    return solve_absorption(params, geometry, options, **kwargs)


# -- existence sweeps -------------------------------------------------------------------------

@dataclass(frozen=True)
class ExistenceVerdict:
    param: float
    q: float
    beta_q: float | None
    beta_S: float
    status: str                     # solution_found | no_bracket | at_threshold | error
    amplitude: float | None = None
    residual: float | None = None
    amplitudes_scanned: tuple[float, float] = (1e-3, 1e3)
    message: str = ""


def _verdict(value: float, kind: str, p: float, epsilon: int, N: int, geometry: CapGeometry,
             options: ShootingOptions, bs: float, threshold_tol: float) -> ExistenceVerdict:
    from .ode import divergence_residual

    q = value if kind == "q" else q_from_beta(value, p)
    base = dict(param=float(value), q=float(q), beta_S=bs, amplitudes_scanned=(options.a_min, options.a_max))
    try:
        params = ProblemParams.separable(p, q, epsilon, N)
    except LeconeError as exc:
        return ExistenceVerdict(beta_q=None, status="error", message=str(exc), **base)
    base["beta_q"] = params.beta
    if abs(params.beta - bs) <= threshold_tol * bs:
        return ExistenceVerdict(status="at_threshold", **base)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sol = solve(params, geometry, options, beta_s=bs)
    except NoBracketError:
        return ExistenceVerdict(status="no_bracket", **base)
    except LeconeError as exc:
        return ExistenceVerdict(status="error", message=f"{type(exc).__name__}: {exc}", **base)
    res = divergence_residual(sol.profile, 1000, relative=True)
    return ExistenceVerdict(status="solution_found", amplitude=sol.amplitude, residual=res, **base)


def existence_scan(values, p: float, epsilon: int, N: int, geometry: CapGeometry, *, kind: str = "q",
                   options: ShootingOptions | None = None, workers: int = 1,
                   threshold_tol: float = 1e-9) -> list[ExistenceVerdict]:
    """Existence verdicts over a range of ``q`` (or ``beta``, via the coupling).

    Output order follows ``values`` regardless of completion order.
    """
    if kind not in ("q", "beta"):
        raise DomainError(f"kind must be 'q' or 'beta', got {kind!r}")
    values = [float(v) for v in values]
    if not values:
        return []
    opts = replace(options or ShootingOptions(), check_hypotheses=False)
    bs = cached_beta_S(p, geometry)
    args = [(v, kind, p, epsilon, N, geometry, opts, bs, threshold_tol) for v in values]
    if workers <= 1:
        return [_verdict(*a) for a in args]
    with cf.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_verdict, *zip(*args)))


def status_flips(verdicts: list[ExistenceVerdict]) -> list[int]:
    """Indices ``i`` where existence differs between entries ``i`` and ``i+1``."""
    found = [v.status == "solution_found" for v in verdicts]
    return [i for i in range(len(found) - 1) if found[i] != found[i + 1]]


# -- homotopy in p ------------------------------------------------------------------------------

@dataclass
class HomotopyResult:
    solution: ShootingSolution
    path: list                        # (p, amplitude) pairs


def p_homotopy_solve(target: ProblemParams, geometry: CapGeometry, p_start: float = 2.0, *,
                     dp: float = 0.05, dp_min: float = 1e-3, coupled: bool | None = None,
                     options: ShootingOptions | None = None) -> HomotopyResult:
    """Continue the root amplitude from ``p_start`` to ``target.p`` at fixed ``q``.

    With ``coupled`` (default: whether ``target`` is separable) ``beta``
    follows ``beta_q(p)`` along the path, otherwise it stays fixed.  Each
    step searches a bracket around the previous amplitude; on failure the
    step is halved down to ``dp_min``.
    """
    opts = replace(options or ShootingOptions(), check_hypotheses=False)
    if coupled is None:
        coupled = math.isclose(target.beta, target.beta_q, rel_tol=1e-12)

    def at(p):
        if coupled:
            return ProblemParams.separable(p, target.q, target.epsilon, target.N)
        return target.replace(p=p)

    params = at(p_start)
    start = solve(params, geometry, opts)
    a = start.amplitude
    p = p_start
    path = [(p, a)]
    step = dp
    direction = 1.0 if target.p >= p_start else -1.0
    rec = None
    while abs(target.p - p) > 1e-15:
        p_next = p + direction * min(step, abs(target.p - p))
        try:
            params = at(p_next)
            rec = _track(params, geometry, opts, a)
        except (LeconeError, ValueError) as exc:
            if step / 2 < dp_min:
                raise ContinuationError(f"lost the root bracket beyond p={p!r}: {exc}", last_good_p=p) from exc
            step /= 2
            continue
        p, a = p_next, rec.amplitude
        path.append((p, a))
        step = min(dp, 2 * step)
    if rec is None:
        return HomotopyResult(start, path)
    sol = ShootingSolution(rec.profile, rec.amplitude, rec.miss, [], [rec.amplitude], None, None,
                           rec.profile.nfev)
    return HomotopyResult(sol, path)


def _track(params, geometry, opts, a_prev, factor=1.25, expansions=4) -> ShootingRecord:
    f = factor
    for _ in range(expansions):
        lo, hi = a_prev / f, a_prev * f
        m_lo = miss_function(lo, params, geometry, opts).miss
        m_hi = miss_function(hi, params, geometry, opts).miss
        if np.sign(m_lo) * np.sign(m_hi) <= 0:
            return _root_in(params, geometry, opts, lo, hi, m_lo, m_hi)
        f = f * f
    raise NoBracketError(f"no sign change within a factor {f!r} of a={a_prev!r}")


# -- end-to-end check in Cartesian coordinates -------------------------------------------------

def separable_residual(profile: RadialProfile, params: ProblemParams | None = None, sample_points: int = 64, *,
                       h: float = 1e-3, epsilon: float | None = None, seed: int = 0,
                       theta_fraction: tuple[float, float] = (0.05, 0.9)) -> float:
    """Max relative residual of ``-div(|grad u|^{p-2} grad u) - eps u^q`` for ``u = |x|^-beta omega``.

    Points are drawn on the annulus ``0.5 <= |x| <= 2`` inside the cone.  The
    divergence uses fluxes at the half points ``x +- h/2 e_i``, with the
    tangential gradient components averaged from centred differences of step
    ``h``; the scheme is second order.  The residual is scaled by
    ``|grad u|^{p-1}/|x| + |eps| u^q``.  ``epsilon`` overrides the source sign
    (``0`` checks p-harmonic functions).
    """
    params = params or profile.params
    N, p, beta, q = params.N, params.p, params.beta, params.q
    eps = params.epsilon if epsilon is None else epsilon
    if N > 4:
        raise DomainError("Cartesian residual check supports N <= 4 only")
    t0 = profile.geometry.theta0
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.5, 2.0, sample_points)
    th = rng.uniform(theta_fraction[0] * t0, theta_fraction[1] * t0, sample_points)
    perp = rng.normal(size=(sample_points, N - 1))
    perp /= np.linalg.norm(perp, axis=1, keepdims=True)
    x = np.empty((sample_points, N))
    x[:, :-1] = (r * np.sin(th))[:, None] * perp
    x[:, -1] = r * np.cos(th)

    def u(pts):
        rr = np.linalg.norm(pts, axis=-1)
        theta = np.arccos(np.clip(pts[..., -1] / rr, -1.0, 1.0))
        w = profile.sample(theta.ravel())[0].reshape(theta.shape)
        return rr ** (-beta) * w

    eye = np.eye(N) * h
    u0 = u(x)
    shifted = {}

    def at(*offsets):
        key = tuple(sorted(offsets))
        if key not in shifted:
            pts = x.copy()
            for j, s in key:
                pts = pts + s * eye[j]
            shifted[key] = u(pts)
        return shifted[key]

    def half_flux(i, s):
        """``|grad u|^{p-2} d_i u`` at ``x + s h/2 e_i`` from a compact stencil."""
        base = at((i, s)) if s > 0 else u0
        nb = u0 if s > 0 else at((i, s))
        g = np.empty((sample_points, N))
        g[:, i] = (base - nb) / h
        for j in range(N):
            if j == i:
                continue
            near = at((j, 1)) - at((j, -1))
            far = at((i, s), (j, 1)) - at((i, s), (j, -1))
            g[:, j] = (near + far) / (4 * h)
        mag = np.linalg.norm(g, axis=1)
        return mag ** (p - 2) * g[:, i]

    div = np.zeros(sample_points)
    for i in range(N):
        div += (half_flux(i, 1) - half_flux(i, -1)) / h
    grad = np.stack([(at((j, 1)) - at((j, -1))) / (2 * h) for j in range(N)], axis=1)
    gmag = np.linalg.norm(grad, axis=1)
    ux = u0
    src = eps * np.abs(ux) ** q
    res = -div - src
    scale = gmag ** (p - 1) / r + abs(eps) * np.abs(ux) ** q
    return float(np.max(np.abs(res) / scale))
