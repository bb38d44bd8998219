from __future__ import annotations

import math

import numpy as np
import pytest

from lecone.errors import DomainError
from lecone.spectral import (beta_S, beta_S_continuation, cached_beta_S, lambda_1_beta, lambda_beta,
                             linear_cap_eigenvalue)
from lecone.sphere import CapGeometry

HALF = math.pi / 2


@pytest.mark.parametrize("N", [3, 4, 5])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_lambda_beta_half_sphere_linear(N, beta):
    res = lambda_beta(beta, 2.0, CapGeometry.for_dimension(N, HALF), tol=1e-10)
    assert res.value == pytest.approx((N - 1) / beta, abs=1e-8)
    assert res.bracket[0] <= res.value <= res.bracket[1]


@pytest.mark.parametrize("p", [1.5, 2.5, 3.0])
def test_lambda_beta_unit_beta_any_p(p):
    # cos is the beta = 1 eigenfunction for every p on the half sphere
    d = 3
    res = lambda_beta(1.0, p, CapGeometry(d, HALF), tol=1e-10)
    assert res.value == pytest.approx(d, abs=1e-8)


@pytest.mark.parametrize("theta0", [math.pi / 4, math.pi / 3, 1.3])
def test_linear_eigenvalue_closed_form_on_s3(theta0):
    # on S^3 the radial Dirichlet modes are sin(k theta)/sin(theta), eigenvalue k^2 - 1
    lam = linear_cap_eigenvalue(CapGeometry(3, theta0), n=4000)
    assert lam == pytest.approx((math.pi / theta0) ** 2 - 1, rel=1e-6)


@pytest.mark.parametrize("d", [2, 4])
def test_linear_eigenvalue_half_sphere(d):
    assert linear_cap_eigenvalue(CapGeometry(d, HALF), n=4000) == pytest.approx(d, abs=1e-5)


def test_linear_eigenvalue_decreases_toward_full_sphere():
    vals = [linear_cap_eigenvalue(CapGeometry(2, t), n=2000) for t in (2.0, 2.8, 3.1)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 0.5


@pytest.mark.parametrize("theta0", [math.pi / 4, math.pi / 3])
def test_beta_times_lambda_matches_linear_eigenvalue(theta0):
    geom = CapGeometry.for_dimension(4, theta0)
    beta = 1.3
    lam = linear_cap_eigenvalue(geom, n=4000)
    assert beta * lambda_beta(beta, 2.0, geom).value == pytest.approx(lam, rel=1e-4)


def test_lambda_beta_decreasing_in_beta():
    geom = CapGeometry.for_dimension(4, 1.0)
    vals = [lambda_beta(b, 2.5, geom).value for b in (0.3, 0.8, 1.5, 3.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_beta_S_half_sphere(N):
    res = beta_S(2.0, CapGeometry.for_dimension(N, HALF))
    assert res.value == pytest.approx(N - 1, abs=1e-6)


def test_beta_S_grows_on_smaller_caps():
    N = 4
    assert beta_S(2.0, CapGeometry.for_dimension(N, math.pi / 3)).value > N - 1


def test_beta_S_solves_its_equation():
    p, geom = 2.5, CapGeometry.for_dimension(4, 1.2)
    b = beta_S(p, geom, tol=1e-10).value
    lam = b * (p - 1) + p - 4
    assert lambda_beta(b, p, geom, tol=1e-12).value == pytest.approx(lam, abs=1e-7)


def test_cached_beta_S_is_consistent():
    geom = CapGeometry.for_dimension(3, HALF)
    assert cached_beta_S(2.0, geom) == cached_beta_S(2.0, geom)
    assert cached_beta_S(2.0, geom) == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("theta0", [math.pi / 3, HALF])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_lambda_1_shift_identity(theta0, beta):
    geom = CapGeometry.for_dimension(4, theta0)
    lam1 = lambda_1_beta(beta, 2.0, geom, n=400).value
    assert lam1 == pytest.approx(linear_cap_eigenvalue(geom, n=4000) + beta**2, rel=1e-4)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_lambda_1_lower_bound(p, beta):
    res = lambda_1_beta(beta, p, CapGeometry.for_dimension(4, math.pi / 3), n=300)
    assert res.value >= beta**p
    nodes, u = res.eigenfunction
    assert np.all(u[:-1] > 0) and u[-1] == 0


def test_lambda_1_converges_under_refinement():
    geom = CapGeometry.for_dimension(4, 1.0)
    vals = [lambda_1_beta(1.0, 3.0, geom, n=n).value for n in (100, 200, 400)]
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] - vals[1]) / vals[2] < 1e-4


def test_continuation_passes_linear_value():
    geom = CapGeometry.for_dimension(3, HALF)
    table = beta_S_continuation([1.8, 1.9, 2.0, 2.1, 2.2], geom)
    assert table.beta_S[2] == pytest.approx(2.0, abs=1e-5)
    assert math.isfinite(table.lipschitz)
    steps = np.abs(np.diff(table.beta_S))
    assert np.all(steps <= table.lipschitz * 0.1 * (1 + 1e-12))


def test_spectral_domain_errors():
    geom = CapGeometry.for_dimension(3, 1.0)
    with pytest.raises(DomainError):
        lambda_beta(0.0, 2.0, geom)
    with pytest.raises(DomainError):
        lambda_1_beta(1.0, 1.0, geom)
    with pytest.raises(DomainError):
        beta_S_continuation([2.0, 1.9], geom)
