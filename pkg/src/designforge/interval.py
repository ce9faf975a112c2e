"""Equal-weight designs for (I, mu_{alpha,beta}, P_n).

A Gauss-Jacobi weighted design is pushed to the unit interval along the
path ``gamma(x) = 2x - 1``, quantized into N equal-weight points and then
polished by damped Gauss-Newton until every R_k (k = 1..n) averages to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import orthopoly
from .core import Design, DesignProblem, ResidualReport
from .errors import ArgumentError, ConvergenceError
from .refine import RefinementConfig, levenberg_marquardt

__all__ = [
    "PathWeighting",
    "DesignResult",
    "quantize_path",
    "interval_design",
    "auto_size",
    "estimate_K_gamma",
    "total_variation",
    "DEFAULT_AUTO_C",
]

DEFAULT_AUTO_C = 4.0


@dataclass
class PathWeighting:
    """Weights ``w_i`` on strictly increasing path parameters ``x_i`` in [0, 1]."""

    parameters: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.parameters = np.asarray(self.parameters, dtype=float).reshape(-1)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.parameters.size != self.weights.size or self.parameters.size == 0:
            raise ArgumentError("parameters and weights must be non-empty and equally long")
        if np.any(np.diff(self.parameters) <= 0):
            raise ArgumentError("path parameters must be strictly increasing")
        if self.parameters[0] < 0 or self.parameters[-1] > 1:
            raise ArgumentError("path parameters must lie in [0, 1]")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ArgumentError("weights must be non-negative and sum to 1")


@dataclass
class DesignResult:
    design: Design
    report: ResidualReport
    iterations: int = 0
    restarts_used: int = 0
    N: int = 0
    info: dict = field(default_factory=dict)


def quantize_path(weighting: PathWeighting, N: int) -> np.ndarray:
    """Points ``p_i = inf{x : u(x) >= i}`` for ``u(x) = x + N sum_{x_j <= x} w_j``.

    ``u`` is piecewise linear with slope one and a jump of ``N w_j`` at each
    ``x_j``, so every ``p_i`` is either a breakpoint ``x_j`` or lies on the
    linear piece just after one.
    """
    if int(N) != N or N < 1:
        raise ArgumentError("N must be a positive integer")
    N = int(N)
    xs = weighting.parameters
    jumps = N * weighting.weights
    cum = np.concatenate([[0.0], np.cumsum(jumps)])
    cum[-1] = N  # guard against rounding in the final jump
    out = np.empty(N)
    j = 0  # u(x) = x + cum[j] on [xs[j-1], xs[j])
    R = xs.size
    for i in range(1, N + 1):
        while True:
            seg_lo = xs[j - 1] if j > 0 else 0.0
            seg_hi = xs[j] if j < R else np.inf
            # linear piece (seg_lo, seg_hi): u = x + cum[j]
            x_lin = i - cum[j]
            if j > 0 and x_lin <= seg_lo:
                out[i - 1] = seg_lo
                break
            if j == 0 and x_lin <= 0.0:
                out[i - 1] = 0.0
                break
            if x_lin < seg_hi:
                out[i - 1] = x_lin
                break
            # jump at xs[j] from xs[j] + cum[j] to xs[j] + cum[j+1]
            if xs[j] + cum[j + 1] >= i:
                out[i - 1] = xs[j]
                j += 1
                break
            j += 1
    return out


def _start_points(params, n, N, m):
    rule = orthopoly.gauss_jacobi_rule(params, m)
    weighting = PathWeighting((rule.nodes + 1.0) / 2.0, rule.weights / rule.weights.sum())
    pts = 2.0 * quantize_path(weighting, N) - 1.0
    return _jitter_duplicates(pts)


def _jitter_duplicates(pts):
    pts = np.sort(pts)
    N = pts.size
    spacing = 2.0 / max(N, 1)
    out = pts.copy()
    start = 0
    while start < N:
        stop = start
        while stop + 1 < N and pts[stop + 1] == pts[start]:
            stop += 1
        c = stop - start + 1
        if c > 1:
            offsets = (np.arange(c) - 0.5 * (c - 1)) * 1e-8 * spacing
            out[start:stop + 1] = np.clip(pts[start] + offsets, -1.0, 1.0)
        start = stop + 1
    return out


def auto_size(alpha: float, beta: float, n: int, C: float = DEFAULT_AUTO_C) -> int:
    """``max(n, ceil(C n^{2 max(alpha, beta) + 2}))``."""
    return max(int(n), int(math.ceil(C * n ** (2 * max(alpha, beta) + 2) - 1e-9)))


def _residual_fn(params, n):
    def fun(x):
        return orthopoly.orthonormal_table(params, n, x)[1:].mean(axis=1)

    def jac(x):
        _, d = orthopoly.orthonormal_table(params, n, x, derivative=True)
        return d[1:] / x.size

    def retract(x, step):
        return np.clip(x + step, -1.0, 1.0)

    return fun, jac, retract


def interval_design(params, n: int, N=None, config: RefinementConfig | None = None,
                    C: float = DEFAULT_AUTO_C) -> DesignResult:
    """Equal-weight n-design for mu_{alpha,beta} with N points (``None``/"auto" picks N).

    Raises ConvergenceError (carrying the best residual) when refinement and
    all restarts fail, which is expected below the existence threshold.
    """
    params = orthopoly.JacobiParams(*params) if not isinstance(params, orthopoly.JacobiParams) else params
    config = config or RefinementConfig()
    if n < 1:
        raise ArgumentError("n must be >= 1")
    if N is None or N == "auto":
        N = auto_size(params.alpha, params.beta, n, C)
    if int(N) != N or N < n:
        raise ArgumentError(f"N must be an integer >= n (got N={N}, n={n})")
    N = int(N)
    problem = DesignProblem.interval(params.alpha, params.beta, n)
    fun, jac, retract = _residual_fn(params, n)
    target = config.residual_target

    def done(r):
        return np.max(np.abs(r)) <= target

    # candidate starts: the (n+1)-point rule, and the N-point rule when it is
    # exact enough; an equal-weight Gauss rule then quantizes onto itself
    orders = [n + 1]
    if N != n + 1 and 2 * N - 1 >= n and N <= 4 * (n + 1):
        orders.append(N)
    starts = [(_start_points(params, n, N, m), m) for m in orders]
    starts.sort(key=lambda s: np.max(np.abs(fun(s[0]))))
    x0, m_used = starts[0]
    info = {"rule_order": m_used, "start_residual": float(np.max(np.abs(fun(x0))))}

    rng = np.random.default_rng(config.restart_seed)
    best_x, best_res = x0, np.inf
    total_iters = 0
    for attempt in range(config.restarts + 1):
        if attempt == 0:
            start = x0
        else:
            scale = 0.5 * attempt / (config.restarts + 1)
            bump = rng.standard_normal(N) * scale * np.sqrt(np.clip(1.0 - x0**2, 1e-4, None)) / max(1.0, N / n)
            start = np.clip(x0 + bump, -1.0, 1.0)
        result = levenberg_marquardt(fun, jac, start, retract, done, config)
        total_iters += result.iterations
        res = float(np.max(np.abs(result.residual)))
        if res < best_res:
            best_x, best_res = result.x, res
        if result.converged:
            design = Design(np.sort(result.x))
            report = ResidualReport.from_residuals(fun(design.points), N)
            info["final_iterations"] = result.iterations
            return DesignResult(design, report, total_iters, attempt, N, info)
    raise ConvergenceError(
        f"interval refinement did not reach {target:g} with N={N} (best {best_res:.3e})",
        best_residual=best_res, best_points=np.sort(best_x), N=N,
    )


def total_variation(coeffs: np.ndarray) -> tuple[float, float]:
    """Total variation and supremum on [-1, 1] of a Chebyshev series."""
    cheb = np.polynomial.Chebyshev(coeffs)
    crit = cheb.deriv().roots() if len(coeffs) > 2 else np.array(
        [] if len(coeffs) < 2 else cheb.deriv().roots())
    crit = np.real(crit[np.abs(np.imag(crit)) < 1e-9]) if crit.size else np.array([])
    crit = crit[(crit > -1.0) & (crit < 1.0)]
    xs = np.sort(np.concatenate([[-1.0, 1.0], crit]))
    vals = cheb(xs)
    return float(np.abs(np.diff(vals)).sum()), float(vals.max())


def estimate_K_gamma(problem: DesignProblem, n_directions: int = 64, grid: int = 1000,
                     seed: int = 0) -> float:
    """Sampled lower bound on ``sup_f var(f o gamma) / max(sup f, 0)`` for gamma(x) = 2x - 1.

    Each sampled f (unit coefficients in the R_k basis, both signs) is
    converted to a Chebyshev series; its variation is summed exactly between
    the real roots of f'.  Directions that beat the running best are
    refined by Nelder-Mead in coefficient space.
    """
    if problem.space != "interval":
        raise ArgumentError("K_gamma is defined here for interval problems")
    if grid < 100:
        raise ArgumentError("grid must be >= 100")
    n = problem.degree
    params = problem.params
    # interpolation at n+1 Chebyshev points is exact for degree-n polynomials
    cheb_x = np.cos(np.pi * (np.arange(n + 1) + 0.5) / (n + 1))
    basis_at_cheb = orthopoly.orthonormal_table(params, n, cheb_x)[1:].T
    fit = np.polynomial.chebyshev.chebvander(cheb_x, n)
    to_cheb = np.linalg.solve(fit, basis_at_cheb)  # columns: Chebyshev coeffs of R_k
    xg = np.linspace(-1.0, 1.0, int(grid))
    basis_grid = orthopoly.orthonormal_table(params, n, xg)[1:].T

    def ratio(z):
        z = z / np.linalg.norm(z)
        var, sup = total_variation(to_cheb @ z)
        vals = basis_grid @ z
        var = max(var, float(np.abs(np.diff(vals)).sum()))
        sup = max(sup, float(vals.max()))
        if sup <= 1e-14:
            return 0.0
        return var / sup

    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((int(n_directions), n))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    best, record = 0.0, -np.inf
    for z in Z:
        for s in (1.0, -1.0):
            r = ratio(s * z)
            best = max(best, r)
            if r > record and n > 1:
                record = r
                res = optimize.minimize(lambda v: -min(ratio(v), 1e12), s * z, method="Nelder-Mead",
                                        options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 100 * n})
                best = max(best, ratio(res.x))
    return float(best)
