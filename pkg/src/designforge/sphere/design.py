"""Equal-weight spherical designs from quantized graph circuits.

The pipeline builds ``G^d_n``, walks its doubled Euler circuit, drops N
points along the circuit's weight measure and then polishes them with
Levenberg-Marquardt on the vector of harmonic moments, keeping every point
on the sphere.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import Design, ResidualReport
from ..errors import ArgumentError, ConvergenceError
from ..refine import RefinementConfig, levenberg_marquardt
from .circuit import euler_circuit, quantize_circuit
from .graph import EmbeddedGraph, SphereGraphParams, build_sphere_graph
from .harmonics import (HarmonicBasis, gegenbauer_residual, poly_space_dim, product_rule,
                        residual_objective, tangent_basis)

__all__ = [
    "SphereDesignResult",
    "sphere_design",
    "auto_size",
    "refine_points",
    "moment_problem",
    "approximate_design_check",
    "check_with_doubling",
    "min_design_size",
    "DEFAULT_AUTO_C",
    "MAX_DOUBLINGS",
]

DEFAULT_AUTO_C = 6.0
MAX_DOUBLINGS = 3


@dataclass
class SphereDesignResult:
    design: Design
    report: ResidualReport
    iterations: int = 0
    N: int = 0
    params: SphereGraphParams | None = None
    info: dict = field(default_factory=dict)


def auto_size(d: int, n: int, C: float = DEFAULT_AUTO_C) -> int:
    """``ceil(C n^d log(n+1)^(d-1))``."""
    return int(math.ceil(C * n**d * math.log(n + 1) ** (d - 1) - 1e-9))


def moment_problem(d: int, n: int):
    """``(fun, jac, retract)`` for the harmonic moments of points on S^d.

    ``fun`` maps an (N, D) array to the mean of an orthonormal basis of the
    zero-mean polynomials of degree <= n; its squared norm equals
    ``sum_k dim_k * residual_k``.  Steps live in per-point tangent
    coordinates and are retracted by renormalizing.
    """
    basis = HarmonicBasis.get(d, n)
    D = d + 1

    def fun(x):
        return basis.values(x).mean(axis=0)

    def jac(x):
        N = len(x)
        T = tangent_basis(x)  # (N, D-1, D)
        G = basis.gradients(x)  # (N, M, D)
        J = np.einsum("nmd,nld->mnl", G, T) / N
        return J.reshape(basis.size, N * (D - 1))

    def retract(x, step):
        T = tangent_basis(x)
        y = x + np.einsum("nl,nld->nd", step.reshape(len(x), D - 1), T)
        return y / np.linalg.norm(y, axis=1, keepdims=True)

    return fun, jac, retract


def _refine(d, n, x0, config, rng):
    fun, jac, retract = moment_problem(d, n)
    target = config.residual_target

    def done(r):
        # max_k residual_k <= sum_k dim_k residual_k = |r|^2
        return float(r @ r) <= target

    best_x, best = x0, np.inf
    iterations = 0
    for attempt in range(config.restarts + 1):
        if attempt == 0:
            start = x0
        else:
            scale = 0.3 * attempt / (config.restarts + 1) / max(n, 1)
            start = retract(x0, scale * rng.standard_normal(x0.shape[0] * d))
        res = levenberg_marquardt(fun, jac, start, retract, done, config)
        iterations += res.iterations
        val = float(res.residual @ res.residual)
        if val < best:
            best_x, best = res.x, val
        if res.converged:
            return res.x, iterations, True, attempt
        # a plain gradient descent stage can escape where the damped step stalls
        x_gd = _descend(d, n, res.x, config)
        r_gd = fun(x_gd)
        if float(r_gd @ r_gd) < best:
            best_x, best = x_gd, float(r_gd @ r_gd)
            res = levenberg_marquardt(fun, jac, x_gd, retract, done, config)
            iterations += res.iterations
            if res.converged:
                return res.x, iterations, True, attempt
    return best_x, iterations, False, config.restarts


def _descend(d, n, x, config, steps=200):
    """Riemannian gradient descent with backtracking on the summed Gegenbauer residual."""
    value, grad = residual_objective(d, n, x)
    lr = 1.0
    for _ in range(steps):
        g2 = float(np.sum(grad * grad))
        if g2 == 0 or value <= config.residual_target:
            break
        while lr > 1e-12:
            y = x - lr * grad
            y /= np.linalg.norm(y, axis=1, keepdims=True)
            v_new, g_new = residual_objective(d, n, y)
            if v_new < value - 1e-4 * lr * g2:
                x, value, grad = y, v_new, g_new
                lr *= 2.0
                break
            lr *= 0.5
        else:
            break
    return x


def refine_points(d: int, n: int, points, config: RefinementConfig | None = None) -> np.ndarray:
    """Polish points on S^d toward an n-design; returns the best configuration found."""
    config = config or RefinementConfig()
    pts = np.asarray(points, dtype=float)
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    x, _, _, _ = _refine(d, n, pts, config, np.random.default_rng(config.restart_seed))
    return x


def _initial_points(d, n, N, params, graph_cache):
    key = (params.A, params.B)
    if key not in graph_cache:
        graph = build_sphere_graph(params)
        graph_cache[key] = (graph, euler_circuit(graph))
    graph, circuit = graph_cache[key]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        q = quantize_circuit(graph, circuit, N)
    return q.points, graph, bool(caught)


def sphere_design(d: int, n: int, N=None, params: SphereGraphParams | None = None,
                  config: RefinementConfig | None = None, C: float = DEFAULT_AUTO_C,
                  max_doublings: int = MAX_DOUBLINGS) -> SphereDesignResult:
    """Equal-weight n-design on S^d (``N=None`` or "auto" picks ``auto_size(d, n, C)``).

    When refinement fails, N is doubled (and the graph constants A, B with
    it) up to ``max_doublings`` times before a ConvergenceError is raised.
    """
    if d < 1 or n < 1:
        raise ArgumentError("need d >= 1 and n >= 1")
    config = config or RefinementConfig()
    if N is None or N == "auto":
        N = auto_size(d, n, C)
    if int(N) != N or N < 1:
        raise ArgumentError("N must be a positive integer")
    N = int(N)
    params = params or SphereGraphParams(d=d, n=n)
    if params.d != d or params.n != n:
        params = SphereGraphParams(params.A, params.B, d, n)
    rng = np.random.default_rng(config.restart_seed)
    fun, _, _ = moment_problem(d, n)
    graph_cache = {}
    t_start = time.perf_counter()
    iterations = 0
    best = (np.inf, None, N)
    for doubling in range(max_doublings + 1):
        x0, graph, coarse = _initial_points(d, n, N, params, graph_cache)
        r0 = fun(x0)
        x, its, ok, restarts = _refine(d, n, x0, config, rng)
        iterations += its
        residuals = gegenbauer_residual(d, n, x)
        if float(np.max(residuals)) < best[0]:
            best = (float(np.max(residuals)), x, N)
        if ok and np.max(residuals) <= config.residual_target:
            info = {
                "start_moment_norm": float(np.linalg.norm(r0)),
                "coarse_quantization": coarse,
                "doublings": doubling,
                "restarts": restarts,
                "graph_edges": graph.n_edges,
                "wall_time": time.perf_counter() - t_start,
            }
            return SphereDesignResult(Design(x), ResidualReport.from_residuals(residuals, N),
                                      iterations, N, params, info)
        N *= 2
        params = params.scaled(2.0)
    raise ConvergenceError(
        f"sphere refinement did not reach {config.residual_target:g} (best {best[0]:.3e} at N={best[2]})",
        best_residual=best[0], best_points=best[1], N=best[2],
    )


def min_design_size(d: int, n: int) -> int:
    """Dimension of polynomials of degree <= floor(n/2) on S^d, a lower bound on N."""
    return poly_space_dim(d, n // 2)


def _as_function(d, n, f_spec):
    if callable(f_spec):
        return f_spec
    idx = int(f_spec)
    basis = HarmonicBasis.get(d, n)
    if not 0 <= idx < basis.size:
        raise ArgumentError(f"basis index must be in [0, {basis.size})")

    def f(x):
        return basis.values(x)[:, idx] ** 2

    return f


def approximate_design_check(graph: EmbeddedGraph, d: int, n: int, f_spec, nodes: int | None = None,
                             degree: int | None = None):
    """Return ``(|integral f - A(f)|, A(f) / 2)``.

    ``A(f)`` sums each weighted circle's weight times the mean of f over an
    equally spaced node set (``max(8n, 2 degree + 1)`` nodes).  The sphere
    integral uses a product rule exact to ``degree`` (default 2n).  An
    integer ``f_spec`` selects the square of that orthonormal basis element;
    a callable is used as is and must be nonnegative on the graph.
    """
    if graph.d != d:
        raise ArgumentError("graph dimension does not match d")
    f = _as_function(d, n, f_spec)
    degree = 2 * n if degree is None else int(degree)
    m = nodes or max(8 * n, 2 * degree + 1)
    theta = 2.0 * np.pi * np.arange(m) / m
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    A_f = 0.0
    for p in graph.circle_parents():
        c, a, b = graph.parent_arc(p)
        pts = c + np.outer(cos_t, a) + np.outer(sin_t, b)
        vals = np.asarray(f(pts), dtype=float)
        if vals.min() < -1e-9:
            raise ArgumentError(f"test function is negative on the graph ({vals.min():.3e})")
        A_f += graph.parent_weight[p] * vals.mean()
    q_nodes, q_w = product_rule(d, degree)
    integral = float(q_w @ np.asarray(f(q_nodes), dtype=float))
    return abs(integral - A_f), 0.5 * A_f


def check_with_doubling(d: int, n: int, f_spec, params: SphereGraphParams | None = None,
                        max_doublings: int = 2):
    """Evaluate the approximate-design inequality, doubling A and B until it holds.

    Returns ``(lhs, rhs, params, doublings)``; ``lhs <= rhs`` signals success.
    """
    params = params or SphereGraphParams(d=d, n=n)
    for k in range(max_doublings + 1):
        lhs, rhs = approximate_design_check(build_sphere_graph(params), d, n, f_spec)
        if lhs <= rhs or k == max_doublings:
            return lhs, rhs, params, k
        params = params.scaled(2.0)
