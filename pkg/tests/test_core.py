import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from designforge import orthopoly
from designforge.core import (CustomProblem, Design, DesignProblem, ResidualReport, WeightedDesign,
                              build_tightness_problem, caratheodory_reduce, estimate_K,
                              moment_residual, verify_design)
from designforge.errors import ArgumentError, DomainError

OCTAHEDRON = np.vstack([np.eye(3), -np.eye(3)])


def test_problem_dimensions():
    assert DesignProblem.interval(0, 0, 5).basis_size == 5
    # harmonics of degree 1..3 on S^2: 3 + 5 + 7
    assert DesignProblem.sphere(2, 3).basis_size == 15
    assert DesignProblem.sphere(1, 4).basis_size == 8


def test_problem_validation():
    with pytest.raises(ArgumentError):
        DesignProblem.interval(-0.7, 0, 2)
    with pytest.raises(ArgumentError):
        DesignProblem.sphere(0, 2)
    with pytest.raises(ArgumentError):
        DesignProblem("torus", 2)


def test_interval_basis_has_zero_mean():
    for ab in [(0, 0), (1.5, -0.5)]:
        prob = DesignProblem.interval(*ab, 6)
        dens = lambda x: orthopoly.measure_density(ab, x)
        for j in range(6):
            val, _ = integrate.quad(lambda x: prob.basis_values([x])[0, j] * dens(x), -1, 1,
                                    limit=200, epsabs=1e-13)
            assert abs(val) < 1e-10


def test_sphere_basis_has_zero_mean_and_unit_gram():
    from designforge.sphere.harmonics import product_rule

    prob = DesignProblem.sphere(2, 4)
    nodes, w = product_rule(2, 10)
    B = prob.basis_values(nodes)
    assert np.max(np.abs(w @ B)) < 1e-12
    assert np.allclose(B.T @ (w[:, None] * B), np.eye(prob.basis_size), atol=1e-11)


def test_symmetric_pair_kills_odd_moment():
    rep = moment_residual(DesignProblem.interval(0, 0, 1), Design(np.array([-0.7, 0.7])))
    assert abs(rep.residuals[0]) < 1e-15


def test_single_zero_point_degree_two():
    rep = moment_residual(DesignProblem.interval(0, 0, 2), Design(np.array([0.0])))
    # R_2 = sqrt(5) * (3x^2 - 1) / 2
    assert rep.residuals[1] == pytest.approx(-math.sqrt(5) / 2, rel=1e-13)


def test_chebyshev_three_nodes_residuals_vanish():
    pts = np.cos(np.array([1, 3, 5]) * np.pi / 6)
    rep = moment_residual(DesignProblem.interval(-0.5, -0.5, 3), pts)
    assert rep.sup_norm < 1e-12
    assert rep.n_points == 3


def test_residual_report_sup_norm():
    rep = ResidualReport.from_residuals([0.1, -0.3, 0.2], 4)
    assert rep.sup_norm == 0.3
    assert rep.to_dict()["n_points"] == 4


def test_errors_for_bad_designs():
    prob = DesignProblem.interval(0, 0, 2)
    with pytest.raises(DomainError):
        moment_residual(prob, np.array([0.0, 1.5]))
    with pytest.raises(ArgumentError):
        moment_residual(prob, np.array([]))
    with pytest.raises(DomainError):
        moment_residual(DesignProblem.sphere(2, 1), np.array([[1.0, 1.0, 0.0]]))
    with pytest.raises(ArgumentError):
        verify_design(prob, np.array([0.0]), tol=0.0)


def test_verify_chebyshev_five():
    k = np.arange(1, 6)
    ok, rep = verify_design(DesignProblem.interval(-0.5, -0.5, 5), np.cos((2 * k - 1) * np.pi / 10), 1e-10)
    assert ok and rep.sup_norm < 1e-12


def test_verify_north_pole_fails():
    ok, rep = verify_design(DesignProblem.sphere(2, 1), np.array([[0.0, 0.0, 1.0]]))
    assert not ok and rep.sup_norm == pytest.approx(1.0)


def _monomial_means(points, degree):
    """Brute-force monomial averages minus the exact sphere averages on S^2."""
    def sphere_mean(e):
        if any(x % 2 for x in e):
            return 0.0
        # ratio of Gamma functions for the normalized surface measure
        a = [(x + 1) / 2 for x in e]
        return math.gamma(1.5) * math.prod(math.gamma(x) for x in a) / (
            math.pi ** 1.5 * math.gamma(sum(a)))

    out = []
    for deg in range(1, degree + 1):
        for e in itertools.product(range(deg + 1), repeat=3):
            if sum(e) != deg:
                continue
            vals = np.prod(points ** np.array(e), axis=1).mean()
            out.append(vals - sphere_mean(e))
    return np.array(out)


def test_verify_octahedron_and_monomial_oracle():
    ok, rep = verify_design(DesignProblem.sphere(2, 3), OCTAHEDRON)
    assert ok
    assert np.max(np.abs(_monomial_means(OCTAHEDRON, 3))) < 1e-14
    # degree 4 fails both ways
    ok4, _ = verify_design(DesignProblem.sphere(2, 4), OCTAHEDRON)
    assert not ok4
    assert np.max(np.abs(_monomial_means(OCTAHEDRON, 4))) > 1e-3


def test_verify_agrees_with_direct_integration():
    # randomly perturbed Gauss-Legendre points: residual equals the quad error of each R_k
    rng = np.random.default_rng(3)
    prob = DesignProblem.interval(0, 0, 4)
    pts = np.clip(orthopoly.gauss_jacobi_rule((0, 0), 6).nodes + 1e-3 * rng.standard_normal(6), -1, 1)
    rep = moment_residual(prob, pts)
    for k in range(1, 5):
        exact, _ = integrate.quad(lambda x: orthopoly.jacobi_eval((0, 0), k, x, normalized=True)[0] / 2,
                                  -1, 1)
        direct = np.mean(orthopoly.jacobi_eval((0, 0), k, pts, normalized=True)[0]) - exact
        assert rep.residuals[k - 1] == pytest.approx(direct, abs=1e-12)


def test_weighted_design_invariants():
    with pytest.raises(ArgumentError):
        WeightedDesign(np.array([0.1, 0.2]), np.array([0.5, 0.4]))
    with pytest.raises(DomainError):
        WeightedDesign(np.array([[1.0, 0.1]]), np.array([1.0]))
    wd = Design(OCTAHEDRON).as_weighted()
    assert np.allclose(wd.weights, 1 / 6)


def test_caratheodory_pentagon():
    t = 2 * np.pi * np.arange(5) / 5
    V = np.column_stack([np.cos(t), np.sin(t)])
    idx, w = caratheodory_reduce(V, np.full(5, 0.2))
    assert len(idx) <= 3
    assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-12
    assert np.max(np.abs(w @ V[idx])) < 1e-9


def test_caratheodory_minimal_inputs_unchanged():
    idx, w = caratheodory_reduce(np.array([[-1.0], [1.0]]), np.array([0.5, 0.5]))
    assert sorted(idx) == [0, 1] and np.allclose(w, 0.5)
    V = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    idx, w = caratheodory_reduce(V, np.full(3, 1 / 3))
    assert sorted(idx) == [0, 1, 2] and np.allclose(w, 1 / 3)


def test_caratheodory_rejects_nonzero_combination():
    with pytest.raises(ArgumentError):
        caratheodory_reduce(np.array([[1.0], [2.0]]), np.array([0.5, 0.5]))


@given(st.integers(1, 8), st.integers(2, 60), st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_caratheodory_random(M, extra, seed):
    rng = np.random.default_rng(seed)
    K = M + 1 + extra
    V = rng.standard_normal((K, M))
    w = rng.random(K)
    w /= w.sum()
    V -= w @ V  # centre so the combination is zero
    idx, w2 = caratheodory_reduce(V, w)
    assert len(idx) <= M + 1
    assert np.all(w2 >= 0) and abs(w2.sum() - 1) < 1e-10
    assert np.max(np.abs(w2 @ V[idx])) < 1e-9


def test_estimate_K_odd_function():
    assert estimate_K(DesignProblem.interval(0, 0, 1), n_directions=4) == pytest.approx(1.0, abs=1e-9)


def test_estimate_K_pure_cosine_on_circle():
    prob = CustomProblem([np.cos], 0.0, 2 * np.pi)
    assert estimate_K(prob, n_directions=4) == pytest.approx(1.0, abs=1e-6)


def test_estimate_K_matches_grid_oracle_degree_two():
    prob = DesignProblem.interval(0, 0, 2)
    x = np.linspace(-1, 1, 20001)
    B = prob.basis_values(x)
    best = 0.0
    for t in np.linspace(0, 2 * np.pi, 20000, endpoint=False):
        f = B @ np.array([np.cos(t), np.sin(t)])
        best = max(best, f.max() / abs(f.min()))
    est = estimate_K(prob, n_directions=32)
    assert est == pytest.approx(best, rel=0.02)
    assert est <= best * (1 + 1e-6)


def test_estimate_K_monotone_in_directions():
    prob = DesignProblem.interval(0.5, 0, 4)
    vals = [estimate_K(prob, n_directions=n, seed=1) for n in (1, 4, 16)]
    assert vals[0] <= vals[1] <= vals[2]


def test_estimate_K_scale_invariant():
    base = DesignProblem.interval(0, 0, 3)
    fs = [lambda x, j=j: base.basis_values(x)[:, j] for j in range(3)]
    scaled = [lambda x, f=f, c=c: c * f(x) for f, c in zip(fs, (1.0, 7.0, 0.01))]
    a = estimate_K(CustomProblem(fs, -1.0, 1.0), n_directions=16)
    b = estimate_K(CustomProblem(scaled, -1.0, 1.0), n_directions=16)
    assert a == pytest.approx(b, rel=1e-6)


def test_tightness_fixture_small():
    fx = build_tightness_problem(2, 1, 0.1, 0.01)
    assert abs(fx.integral(fx.F)) < 1e-9
    assert abs(fx.integrals["f1"]) < 1e-9


def test_tightness_fixture_shape_and_disjoint_supports():
    fx = build_tightness_problem(4, 2, 0.1, 1e-3)
    x = np.linspace(0, 1, 20001)
    F = fx.F(x)
    assert F.max() <= fx.k_eff + 1e-12 and F.min() >= -1 - 1e-12
    assert np.all(F[x <= 1 / (2 * fx.k_eff)] == pytest.approx(fx.k_eff))
    assert np.all(F[x >= 0.5] == -1.0)
    sup = sorted(fx.support(i) for i in range(3))
    assert all(a[1] <= b[0] for a, b in zip(sup, sup[1:]))
    assert sup[0][0] >= 0 and sup[-1][1] <= 1 / (4 * fx.k)


def test_tightness_infeasible_delta():
    with pytest.raises(ArgumentError):
        build_tightness_problem(10, 2, 0.1, 0.01)
    with pytest.raises(ArgumentError):
        build_tightness_problem(1, 2, 0.1, 1e-3)
