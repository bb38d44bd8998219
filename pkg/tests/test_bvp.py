from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from scipy.integrate import solve_bvp

from lecone.bvp import (ShootingOptions, _multistart_brackets, existence_scan, miss_function, p_homotopy_solve,
                        profile_distance, scan_amplitudes, separable_residual, solve_absorption, solve_source,
                        status_flips)
from lecone.errors import DomainError, NoBracketError
from lecone.ode import IntegrationOptions, Spectral, divergence_residual, profile_from_arrays
from lecone.params import ProblemParams, q_critical
from lecone.sphere import CapGeometry

HALF = math.pi / 2
TIGHT = ShootingOptions(integration=IntegrationOptions(rtol=1e-12))


def collocation_p2(params: ProblemParams, theta0: float, guess_amplitude: float):
    """Independent p = 2 solve of omega'' + (d-1) cot omega' + beta lambda omega + eps omega^q = 0."""
    d = params.d
    bl = params.beta * params.lam
    eps, q = params.epsilon, params.q
    S = np.array([[0.0, 0.0], [0.0, -(d - 1.0)]])

    def rhs(t, y):
        w, dw = y
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.where(t > 0, 1.0 / np.tan(t) - 1.0 / t, 0.0)
        return np.vstack([dw, -(d - 1) * corr * dw - bl * w - eps * np.abs(w) ** q])

    def bc(ya, yb):
        return np.array([ya[1], yb[0]])

    t = np.linspace(0, theta0, 2000)
    y0 = np.vstack([guess_amplitude * np.cos(HALF * t / theta0),
                    -guess_amplitude * HALF / theta0 * np.sin(HALF * t / theta0)])
    sol = solve_bvp(rhs, bc, t, y0, S=S, tol=1e-8, max_nodes=200000)
    assert sol.status == 0, sol.message
    return sol


@pytest.fixture(scope="module")
def source_case():
    params = ProblemParams.separable(2.0, 3.0, 1, 4)
    geom = CapGeometry.for_dimension(4, math.pi / 3)
    return params, geom, solve_source(params, geom, TIGHT)


@pytest.fixture(scope="module")
def absorption_case():
    params = ProblemParams(2.0, 1.8, -1, 2.5, 3)
    geom = CapGeometry.for_dimension(3, HALF)
    return params, geom, solve_absorption(params, geom)


def test_source_solution_properties(source_case):
    params, geom, sol = source_case
    prof = sol.profile
    assert prof.termination.kind == "reached_theta0"
    assert 0 <= sol.miss <= 1e-9 * sol.amplitude
    assert prof.is_positive()
    assert divergence_residual(prof, relative=True) < 1e-5
    assert len(sol.brackets) == 1


def test_source_matches_collocation(source_case):
    params, geom, sol = source_case
    ref = collocation_p2(params, geom.theta0, 4.0)
    assert ref.sol(0.0)[0] == pytest.approx(sol.amplitude, rel=1e-6)
    th = np.linspace(0, geom.theta0, 50)
    assert np.max(np.abs(ref.sol(th)[0] - sol.profile.sample(th)[0])) < 1e-6 * sol.amplitude


def test_source_equator_case_matches_collocation():
    # beta = 1, p = 2, N = 3: lambda = 0 and omega'' + cot omega' = -omega^3
    params = ProblemParams(2.0, 3.0, 1, 1.0, 3)
    geom = CapGeometry.for_dimension(3, HALF)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = solve_source(params, geom, TIGHT)
    ref = collocation_p2(params, HALF, sol.amplitude * 0.8)
    assert ref.sol(0.0)[0] == pytest.approx(sol.amplitude, rel=1e-6)
    assert divergence_residual(sol.profile, relative=True) < 1e-5


def test_source_no_bracket_at_critical_exponent():
    params = ProblemParams.separable(2.0, q_critical(2.0, 5), 1, 5)
    with pytest.warns(RuntimeWarning):
        with pytest.raises(NoBracketError) as info:
            solve_source(params, CapGeometry.for_dimension(5, math.pi / 3))
    assert len(info.value.amplitudes) == 200


def test_source_no_bracket_above_spectral_exponent():
    # half sphere, p=2, N=3: beta_S = 2 and beta_q = 2/(q-1) = 2.5 for q = 1.8
    params = ProblemParams.separable(2.0, 1.8, 1, 3)
    with pytest.warns(RuntimeWarning, match="beta_S"):
        with pytest.raises(NoBracketError):
            solve_source(params, CapGeometry.for_dimension(3, HALF))


def test_miss_signs_for_absorption():
    params = ProblemParams(2.0, 1.8, -1, 2.5, 3)
    geom = CapGeometry.for_dimension(3, HALF)
    assert miss_function(1e-3, params, geom).miss < 0
    assert miss_function(1e3, params, geom).miss > 0


def test_absorption_unique(absorption_case):
    params, geom, sol = absorption_case
    assert sol.unique is True
    assert len(sol.roots) >= 10
    assert len(sol.brackets) == 1
    assert max(sol.roots) - min(sol.roots) < 1e-8 * sol.amplitude
    assert sol.profile.is_positive()


def test_absorption_matches_collocation(absorption_case):
    params, geom, sol = absorption_case
    ref = collocation_p2(params, HALF, 2.0)
    assert ref.sol(0.0)[0] == pytest.approx(sol.amplitude, rel=1e-6)


def test_absorption_single_sign_change():
    params = ProblemParams(2.0, 1.8, -1, 2.5, 3)
    scan = scan_amplitudes(params, CapGeometry.for_dimension(3, HALF))
    assert len(scan.sign_changes()) == 1


def test_absorption_no_bracket_below_spectral_exponent():
    params = ProblemParams.separable(2.0, 2.5, -1, 3)      # beta_q = 4/3 < 2
    with pytest.warns(RuntimeWarning):
        with pytest.raises(NoBracketError):
            solve_absorption(params, CapGeometry.for_dimension(3, HALF))


def test_sign_checks():
    geom = CapGeometry.for_dimension(3, HALF)
    with pytest.raises(DomainError):
        solve_source(ProblemParams(2.0, 1.8, -1, 2.5, 3), geom)
    with pytest.raises(DomainError):
        solve_absorption(ProblemParams(2.0, 1.8, 1, 2.5, 3), geom)


def test_multistart_brackets_are_distinct_and_contain_change():
    from lecone.bvp import AmplitudeScan
    amps = np.geomspace(1, 100, 30)
    scan = AmplitudeScan(amps, np.where(amps < 5, -1.0, 1.0))
    k = scan.sign_changes()[0]
    for edge_k in (k, 0, 28):
        pairs = _multistart_brackets(scan, edge_k, 10)
        assert len(pairs) == 10 and len(set(pairs)) == 10
        assert all(lo <= edge_k < hi for lo, hi in pairs)


def test_existence_scan_empty_and_order_stable():
    geom = CapGeometry.for_dimension(3, HALF)
    assert existence_scan([], 2.0, 1, 3, geom) == []
    qs = [2.4, 0.5, 1.7]
    serial = existence_scan(qs, 2.0, 1, 3, geom)
    parallel = existence_scan(qs, 2.0, 1, 3, geom, workers=2)
    assert [v.param for v in serial] == qs
    assert serial == parallel
    assert serial[1].status == "error"          # q <= p - 1
    assert serial[0].status == "solution_found"
    assert serial[2].status == "no_bracket"


def test_existence_scan_at_threshold():
    geom = CapGeometry.for_dimension(3, HALF)
    v = existence_scan([2.0], 2.0, 1, 3, geom, threshold_tol=1e-6)
    assert v[0].status == "at_threshold"


def test_status_flips():
    from lecone.bvp import ExistenceVerdict
    st = ["no_bracket", "no_bracket", "solution_found", "solution_found"]
    vs = [ExistenceVerdict(i, i, 1.0, 1.0, s) for i, s in enumerate(st)]
    assert status_flips(vs) == [1]


def test_homotopy_degenerate(source_case):
    params, geom, sol = source_case
    h = p_homotopy_solve(params, geom, options=TIGHT)
    assert h.solution.amplitude == sol.amplitude
    assert h.path == [(2.0, sol.amplitude)]


def test_homotopy_absorption_to_p_2_5():
    target = ProblemParams(2.5, 3.0, -1, 2.5, 3)
    geom = CapGeometry.for_dimension(3, HALF)
    h = p_homotopy_solve(target, geom)
    cold = solve_absorption(target, geom, multistart=False)
    assert h.solution.amplitude == pytest.approx(cold.amplitude, rel=1e-6)
    assert h.path[-1][0] == pytest.approx(2.5)


def test_homotopy_source_to_p_1_5():
    target = ProblemParams.separable(1.5, 1.8, 1, 4)
    geom = CapGeometry.for_dimension(4, math.pi / 3)
    h = p_homotopy_solve(target, geom)
    cold = solve_source(target, geom)
    assert h.solution.amplitude == pytest.approx(cold.amplitude, rel=1e-6)


def _harmonic_profile():
    # u = x_3 |x|^-3: beta = 2, omega = cos on the half sphere of S^2
    params = ProblemParams(2.0, 2.0, 1, 2.0, 3)
    geom = CapGeometry.for_dimension(3, HALF)
    th = np.linspace(0, HALF, 40001)
    return profile_from_arrays(th, np.cos(th), -np.sin(th), params, geom, Spectral(1.0))


def test_separable_residual_harmonic_oracle():
    prof = _harmonic_profile()
    hs = np.array([1e-3, 5e-4, 2.5e-4])
    res = np.array([separable_residual(prof, epsilon=0.0, h=h) for h in hs])
    assert res[-1] < 1e-5
    # pure truncation error: second order in h
    assert np.polyfit(np.log(hs), np.log(res), 1)[0] == pytest.approx(2.0, abs=0.05)


def test_separable_residual_second_order(source_case):
    params, geom, sol = source_case
    hs = np.array([1e-2, 5e-3, 2.5e-3])
    res = np.array([separable_residual(sol.profile, h=h) for h in hs])
    order = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert order == pytest.approx(2.0, abs=0.2)


def test_separable_residual_detects_scaled_profile(source_case):
    params, geom, sol = source_case
    assert separable_residual(sol.profile.scaled(1.5)) > 1e-2


def test_separable_residual_dimension_limit():
    params = ProblemParams(2.0, 2.0, 1, 2.0, 5)
    geom = CapGeometry.for_dimension(5, 1.0)
    th = np.linspace(0, 1.0, 11)
    prof = profile_from_arrays(th, np.cos(th), -np.sin(th), params, geom)
    with pytest.raises(DomainError):
        separable_residual(prof)


def test_profile_distance_zero_for_same_profile(source_case):
    assert profile_distance(source_case[2].profile, source_case[2].profile) == 0.0
