import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from designforge import orthopoly
from designforge.errors import ArgumentError, DomainError
from designforge.orthopoly import JacobiParams

params_st = st.tuples(st.floats(-0.5, 3.0), st.floats(-0.5, 3.0))


def test_params_reject_below_minus_half():
    with pytest.raises(ArgumentError):
        JacobiParams(-0.6, 0.0)
    with pytest.raises(ArgumentError):
        orthopoly.jacobi_eval((0.0, -0.51), 2, 0.3)


def test_degree_zero_is_one():
    v, dv = orthopoly.jacobi_eval((0.7, 1.3), 0, np.linspace(-1, 1, 5))
    assert np.allclose(v, 1.0) and np.allclose(dv, 0.0)


@given(params_st, st.integers(0, 40))
@settings(max_examples=60, deadline=None)
def test_endpoint_value_is_binomial(ab, n):
    a, b = ab
    v, _ = orthopoly.jacobi_eval(ab, n, 1.0)
    expected = special.binom(n + a, n)
    assert v == pytest.approx(expected, rel=1e-11)
    # reflection: P_n^(a,b)(-1) = (-1)^n binom(n+b, n)
    v_neg, _ = orthopoly.jacobi_eval(ab, n, -1.0)
    assert v_neg == pytest.approx((-1) ** n * special.binom(n + b, n), rel=1e-11)


def test_endpoints_up_to_degree_200():
    for ab in [(0.0, 0.0), (-0.5, 2.0), (1.5, 0.25)]:
        for n in range(0, 201, 20):
            v, _ = orthopoly.jacobi_eval(ab, n, np.array([1.0, -1.0]))
            assert v[0] == pytest.approx(special.binom(n + ab[0], n), rel=1e-9)
            assert abs(v[1]) == pytest.approx(special.binom(n + ab[1], n), rel=1e-9)


@given(params_st, st.integers(0, 25), st.floats(-1.0, 1.0))
@settings(max_examples=80, deadline=None)
def test_matches_scipy(ab, n, x):
    v, dv = orthopoly.jacobi_eval(ab, n, x)
    assert v == pytest.approx(special.eval_jacobi(n, ab[0], ab[1], x), rel=1e-9, abs=1e-9)
    if n >= 1:
        ref = 0.5 * (n + ab[0] + ab[1] + 1) * special.eval_jacobi(n - 1, ab[0] + 1, ab[1] + 1, x)
        assert dv == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_chebyshev_degree_four_is_scaled_cosine():
    theta = np.linspace(0, np.pi, 41)
    v, _ = orthopoly.jacobi_eval((-0.5, -0.5), 4, np.cos(theta))
    p4_at_1 = special.binom(4 - 0.5, 4)
    assert np.allclose(v, p4_at_1 * np.cos(4 * theta), atol=1e-13)


def test_derivative_matches_finite_difference():
    x = np.linspace(-0.9, 0.9, 7)
    h = 1e-6
    for ab in [(0.0, 0.0), (1.2, -0.3)]:
        _, dv = orthopoly.jacobi_eval(ab, 6, x, normalized=True)
        fd = (orthopoly.jacobi_eval(ab, 6, x + h, normalized=True)[0]
              - orthopoly.jacobi_eval(ab, 6, x - h, normalized=True)[0]) / (2 * h)
        assert np.allclose(dv, fd, rtol=1e-7, atol=1e-7)


def test_evaluation_outside_interval_raises():
    with pytest.raises(DomainError):
        orthopoly.jacobi_eval((0, 0), 3, 1.01)


def test_norm_degree_zero_and_legendre():
    assert orthopoly.jacobi_l2_norm_sq((0.4, 2.0), 0) == 1.0
    for n in range(1, 12):
        assert orthopoly.jacobi_l2_norm_sq((0, 0), n) == pytest.approx(1.0 / (2 * n + 1), rel=1e-13)


@pytest.mark.parametrize("ab", [(0.0, 0.0), (-0.5, -0.5), (1.0, 0.5), (2.5, -0.25), (0.3, 3.0)])
def test_norm_degree_six_matches_adaptive_quadrature(ab):
    a, b = ab
    dens = lambda x: orthopoly.measure_density(ab, x)
    val, _ = integrate.quad(lambda x: special.eval_jacobi(6, a, b, x) ** 2 * dens(x), -1, 1,
                            weight=None, limit=200, epsabs=1e-14, epsrel=1e-13)
    assert val == pytest.approx(orthopoly.jacobi_l2_norm_sq(ab, 6), rel=1e-10)


@pytest.mark.parametrize("ab", [(0.0, 0.0), (-0.5, 1.5), (2.0, 2.0)])
def test_measure_density_has_unit_mass(ab):
    val, _ = integrate.quad(lambda x: orthopoly.measure_density(ab, x), -1, 1, limit=200)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_norm_large_degree_does_not_overflow():
    v = orthopoly.jacobi_l2_norm_sq((3.0, 3.0), 5000)
    assert np.isfinite(v) and v > 0


def test_chebyshev_gauss_rule():
    rule = orthopoly.gauss_jacobi_rule((-0.5, -0.5), 5)
    k = np.arange(1, 6)
    assert np.allclose(np.sort(rule.nodes), np.sort(np.cos((2 * k - 1) * np.pi / 10)), atol=1e-12)
    assert np.allclose(rule.weights, 0.2, atol=1e-12)
    assert rule.exact_degree == 9


def test_gauss_legendre_three_points():
    rule = orthopoly.gauss_jacobi_rule((0, 0), 3)
    r = math.sqrt(3 / 5)
    assert np.allclose(rule.nodes, [-r, 0, r], atol=1e-13)
    assert np.allclose(rule.weights, [5 / 18, 4 / 9, 5 / 18], atol=1e-13)


@given(params_st, st.integers(1, 40))
@settings(max_examples=50, deadline=None)
def test_rule_weights_sum_to_one_and_annihilate(ab, n):
    rule = orthopoly.gauss_jacobi_rule(ab, n)
    assert abs(rule.weights.sum() - 1.0) < 1e-12
    assert np.all(rule.weights > 0)
    assert np.all(np.diff(rule.nodes) > 0)
    table = orthopoly.orthonormal_table(ab, 2 * n - 1, rule.nodes)
    assert np.max(np.abs(table[1:] @ rule.weights)) < 1e-11


def test_weights_match_eigenvector_method():
    # Golub-Welsch weights are squared first eigenvector components
    from scipy.linalg import eigh_tridiagonal

    for ab in [(0.0, 0.0), (1.5, -0.5), (0.2, 2.7)]:
        b, a = orthopoly.recurrence_coefficients(*ab, 12)
        vals, vecs = eigh_tridiagonal(b[:12], a[1:12])
        rule = orthopoly.gauss_jacobi_rule(ab, 12)
        assert np.allclose(rule.nodes, vals, atol=1e-13)
        assert np.allclose(rule.weights, vecs[0] ** 2, atol=1e-13)


def test_orthonormality_up_to_fifty():
    for ab in [(0.0, 0.0), (-0.5, 1.0), (2.0, 0.5)]:
        rule = orthopoly.gauss_jacobi_rule(ab, 51)
        R = orthopoly.orthonormal_table(ab, 50, rule.nodes)
        gram = (R * rule.weights) @ R.T
        assert np.max(np.abs(gram - np.eye(51))) < 1e-10


def test_nodes_interlace():
    for ab in [(0.0, 0.0), (1.0, -0.5), (2.5, 2.5)]:
        for n in (3, 8, 17):
            small = orthopoly.gauss_jacobi_rule(ab, n).nodes
            big = orthopoly.gauss_jacobi_rule(ab, n + 1).nodes
            assert np.all(big[:-1] < small) and np.all(small < big[1:])


def test_shifted_legendre_two_points():
    rule = orthopoly.shifted_rule_01(0, 0, 2)
    s3 = math.sqrt(3)
    assert np.allclose(rule.nodes, [(3 - s3) / 6, (3 + s3) / 6], atol=1e-14)
    assert np.allclose(rule.weights, [0.5, 0.5], atol=1e-14)


def test_shifted_rule_moments():
    rule = orthopoly.shifted_rule_01(0.5, 0.0, 4)
    for k in (1, 2, 3):
        assert rule.integrate(lambda s: s**k) == pytest.approx(3 / (2 * k + 3), abs=1e-12)


@given(st.floats(-0.99, 4.0), st.floats(-0.99, 4.0), st.integers(1, 30))
@settings(max_examples=40, deadline=None)
def test_shifted_nodes_interior(p, q, n):
    rule = orthopoly.shifted_rule_01(p, q, n)
    assert np.all(rule.nodes > 0) and np.all(rule.nodes < 1)
    assert abs(rule.weights.sum() - 1) < 1e-12


def test_shifted_rule_rejects_nonintegrable_exponent():
    with pytest.raises(ArgumentError):
        orthopoly.shifted_rule_01(-1.0, 0.0, 3)
