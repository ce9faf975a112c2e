import itertools
import math

import numpy as np
import pytest

from designforge.errors import ArgumentError, ConvergenceError
from designforge.refine import RefinementConfig
from designforge.sphere.design import (approximate_design_check, auto_size, check_with_doubling,
                                       min_design_size, moment_problem, refine_points, sphere_design)
from designforge.sphere.graph import SphereGraphParams, build_sphere_graph
from designforge.sphere.harmonics import HarmonicBasis, gegenbauer_residual, tangent_basis


def sphere_monomial_mean(e):
    if any(x % 2 for x in e):
        return 0.0
    a = [(x + 1) / 2 for x in e]
    D = len(e)
    return math.gamma(D / 2) * math.prod(math.gamma(x) for x in a) / (math.pi ** (D / 2) * math.gamma(sum(a)))


def test_auto_size_formula():
    assert auto_size(2, 3) == math.ceil(6 * 9 * math.log(4))
    assert auto_size(1, 5) == 30


def test_circle_roots_of_unity_need_no_refinement():
    res = sphere_design(1, 5, 6)
    assert res.iterations == 0
    assert res.report.sup_norm < 1e-14
    angles = np.sort(np.mod(np.arctan2(res.design.points[:, 1], res.design.points[:, 0]), 2 * np.pi))
    assert np.allclose(np.diff(angles), 2 * np.pi / 6)


def test_s2_strength_three_with_24_points():
    res = sphere_design(2, 3, 24)
    x = res.design.points
    assert res.N == 24
    assert np.max(gegenbauer_residual(2, 3, x)) < 1e-8
    # direct monomial moments up to degree 3
    for e in itertools.product(range(4), repeat=3):
        if 1 <= sum(e) <= 3:
            assert np.prod(x ** np.array(e), axis=1).mean() == pytest.approx(sphere_monomial_mean(e), abs=1e-7)


def test_s2_strength_five_respects_lower_bound():
    res = sphere_design(2, 5)
    assert res.N >= min_design_size(2, 5) == 9
    assert res.report.sup_norm < 1e-8


@pytest.mark.parametrize("d,n", [(2, 2), (3, 2), (4, 2)])
def test_converged_designs_meet_dimension_bound(d, n):
    res = sphere_design(d, n)
    assert res.N >= min_design_size(d, n)
    assert np.allclose(np.linalg.norm(res.design.points, axis=1), 1.0, atol=1e-12)


def test_design_is_deterministic():
    a = sphere_design(2, 4, 60).design.points
    b = sphere_design(2, 4, 60).design.points
    assert np.array_equal(a, b)


def test_impossible_size_raises_with_best_residual():
    cfg = RefinementConfig(max_iterations=30, restarts=1)
    with pytest.raises(ConvergenceError) as info:
        sphere_design(2, 4, 3, config=cfg, max_doublings=0)
    assert info.value.best_residual > 1e-6
    assert info.value.best_points.shape == (3, 3)


def test_bad_arguments():
    with pytest.raises(ArgumentError):
        sphere_design(0, 2)
    with pytest.raises(ArgumentError):
        sphere_design(2, 2, 0)


def test_moment_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    fun, jac, retract = moment_problem(2, 4)
    for _ in range(3):
        x = rng.standard_normal((30, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        J = jac(x)
        T = tangent_basis(x)
        h = 1e-6
        for col in rng.choice(60, 6, replace=False):
            i, l = divmod(col, 2)
            def at(s):
                y = x.copy()
                y[i] = np.cos(s) * x[i] + np.sin(s) * T[i, l]
                return fun(y)
            fd = (at(h) - at(-h)) / (2 * h)
            assert np.allclose(J[:, col], fd, rtol=1e-5, atol=1e-8)


def test_retraction_stays_on_sphere():
    fun, jac, retract = moment_problem(3, 2)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((10, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y = retract(x, rng.standard_normal(30))
    assert np.allclose(np.linalg.norm(y, axis=1), 1.0)


def test_refine_points_improves_residual():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((40, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y = refine_points(2, 3, x)
    assert np.max(gegenbauer_residual(2, 3, y)) < 1e-10
    assert np.max(gegenbauer_residual(2, 3, y)) < np.max(gegenbauer_residual(2, 3, x))


def test_constant_function_check():
    g = build_sphere_graph(SphereGraphParams(d=2, n=3))
    lhs, rhs = approximate_design_check(g, 2, 3, lambda x: np.ones(len(x)))
    assert rhs == pytest.approx(0.5)
    assert lhs < 1e-14


def test_zonal_square_inequality():
    g = build_sphere_graph(SphereGraphParams(d=2, n=2))
    lhs, rhs = approximate_design_check(g, 2, 2, lambda x: x[:, 2] ** 2)
    assert lhs <= rhs
    # exact in this case: the circle measure integrates degree <= 2n polynomials
    assert lhs < 1e-12


def test_squared_zonal_harmonic_default_constants():
    from scipy.special import eval_legendre

    for n in (2, 4, 8):
        f = lambda x, n=n: (2 * n + 1) * eval_legendre(n, x[:, 2]) ** 2
        lhs, rhs, params, k = check_with_doubling(2, n, f)
        assert lhs <= rhs and k == 0


def test_basis_index_and_negative_function():
    g = build_sphere_graph(SphereGraphParams(d=3, n=2))
    for idx in range(HarmonicBasis.get(3, 2).size):
        lhs, rhs = approximate_design_check(g, 3, 2, idx)
        assert lhs <= rhs
    with pytest.raises(ArgumentError):
        approximate_design_check(g, 3, 2, lambda x: x[:, 0])
    with pytest.raises(ArgumentError):
        approximate_design_check(g, 3, 2, 10_000)
