from __future__ import annotations

import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lecone.errors import DomainError
from lecone.params import (INFINITE, ProblemParams, beta_critical, beta_q, lambda_of_beta, pohozaev_coeffs,
                           pohozaev_coeffs_factored, q_critical, q_from_beta)


@pytest.mark.parametrize("beta,p,N,expected", [(1, 2, 3, 0.0), (2, 3, 5, 2.0)])
def test_lambda_of_beta_values(beta, p, N, expected):
    assert lambda_of_beta(beta, p, N) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("q,p,expected", [(3, 2, 1.0), (5, 2, 0.5)])
def test_beta_q_values(q, p, expected):
    assert beta_q(q, p) == pytest.approx(expected, rel=1e-15)


def test_q_critical_values():
    assert q_critical(2, 4) == pytest.approx(5.0)
    # 4*2/(4-2) - 1
    assert q_critical(2, 5) == pytest.approx(3.0)
    assert q_critical(3, 4) == INFINITE
    assert math.isinf(q_critical(4, 4))


def test_beta_critical_values():
    assert beta_critical(2, 4) == pytest.approx(0.5)
    assert beta_critical(2, 5) == pytest.approx(1.0)


@pytest.mark.parametrize("p,N", [(2, 4), (2, 5), (2.5, 5), (3, 6), (1.5, 3)])
def test_beta_q_at_q_critical_is_beta_critical(p, N):
    assert beta_q(q_critical(p, N), p) == pytest.approx(beta_critical(p, N), rel=1e-13)


@pytest.mark.parametrize("p,N", [(2, 4), (2, 5), (2.5, 5), (3, 6)])
def test_lambda_at_beta_critical_matches_substitution(p, N):
    b = beta_critical(p, N)
    assert lambda_of_beta(b, p, N) == pytest.approx((p - 1) * b + p - N, rel=1e-14)
    # at beta_c, lambda(beta_c) = (N-1-p)(p-1)/p + p - N
    assert lambda_of_beta(b, p, N) == pytest.approx((N - 1 - p) * (p - 1) / p + p - N, abs=1e-14)


@pytest.mark.parametrize("p,N", [(2, 4), (2, 5), (2.5, 5), (3, 6)])
def test_coefficients_vanish_at_criticality(p, N):
    params = ProblemParams.separable(p, q_critical(p, N), 1, N)
    assert params.beta == pytest.approx(beta_critical(p, N), rel=1e-14)
    for c in pohozaev_coeffs(params).as_tuple():
        assert abs(c) < 1e-12
    for c in pohozaev_coeffs_factored(beta_critical(p, N), p, N).as_tuple():
        assert abs(c) < 1e-12


def test_domain_errors():
    with pytest.raises(DomainError):
        beta_q(1.0, 2.0)           # q <= p - 1
    with pytest.raises(DomainError):
        lambda_of_beta(1.0, 1.0, 3)
    with pytest.raises(DomainError):
        ProblemParams(2.0, 3.0, 0, 1.0, 3)
    with pytest.raises(DomainError):
        ProblemParams(2.0, 3.0, 1, -1.0, 3)
    with pytest.raises(DomainError):
        ProblemParams(2.0, 3.0, 1, 1.0, 1)


def test_params_properties():
    pr = ProblemParams.separable(2.0, 3.0, 1, 4)
    assert pr.d == 3
    assert pr.beta == pytest.approx(1.0)
    assert pr.lam == pytest.approx(lambda_of_beta(1.0, 2.0, 4))
    assert pr.q_c == pytest.approx(5.0)
    assert pr.beta_c == pytest.approx(0.5)
    other = pr.replace(p=2.5)
    assert other.p == 2.5 and other.beta == pr.beta


admissible = st.tuples(st.integers(3, 9), st.floats(0.0, 1.0), st.floats(0.05, 9.9))


def _pnb(t):
    N, frac, beta = t
    p = 1.0 + 1e-3 + frac * (N - 2 - 2e-3)      # 1 < p < N - 1
    return p, N, beta


@settings(max_examples=200, deadline=None)
@given(admissible)
def test_factored_equals_expanded_on_coupling(t):
    p, N, beta = _pnb(t)
    q = q_from_beta(beta, p)
    exp = pohozaev_coeffs(ProblemParams(p, q, 1, beta, N)).as_tuple()
    fac = pohozaev_coeffs_factored(beta, p, N).as_tuple()
    for e, f in zip(exp, fac):
        assert abs(e - f) <= 1e-12 * max(1.0, abs(e), abs(f))


@settings(max_examples=300, deadline=None)
@given(admissible)
def test_coefficients_not_all_nonnegative_off_criticality(t):
    p, N, beta = _pnb(t)
    assume(abs(beta - beta_critical(p, N)) > 1e-3)
    A, B, C = pohozaev_coeffs_factored(beta, p, N).as_tuple()
    assert min(A, B, C) < 0


@settings(max_examples=200, deadline=None)
@given(st.floats(1.05, 6.0), st.floats(0.01, 50.0))
def test_beta_q_round_trip(p, beta):
    q = q_from_beta(beta, p)
    assert q > p - 1
    assert beta_q(q, p) == pytest.approx(beta, rel=1e-11)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.05, 6.0), st.floats(0.05, 5.0), st.floats(0.05, 5.0))
def test_beta_q_decreasing_in_q(p, dq1, dq2):
    q1 = p - 1 + dq1
    q2 = q1 + dq2
    assert beta_q(q2, p) < beta_q(q1, p)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.05, 6.0), st.integers(2, 10), st.floats(0.01, 10.0), st.floats(0.01, 10.0))
def test_lambda_affine_in_beta(p, N, b, db):
    slope = (lambda_of_beta(b + db, p, N) - lambda_of_beta(b, p, N)) / db
    assert slope == pytest.approx(p - 1, rel=1e-8, abs=1e-8)
