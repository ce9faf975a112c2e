"""Design problems, moment residuals, verification and weight reduction.

A design problem fixes a probability space and a finite-dimensional space
``V`` of zero-mean test functions.  A point set is a design when the
equal-weight average of every function in ``V`` vanishes, which is checked
here through per-basis-function residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.stats import qmc, norm

from . import orthopoly
from .errors import ArgumentError, DegeneracyError, DomainError
from .sphere import harmonics

__all__ = [
    "DesignProblem",
    "CustomProblem",
    "WeightedDesign",
    "Design",
    "ResidualReport",
    "TightnessFixture",
    "moment_residual",
    "verify_design",
    "caratheodory_reduce",
    "estimate_K",
    "build_tightness_problem",
    "DEFAULT_TOL",
]

DEFAULT_TOL = {"interval": 1e-10, "sphere": 1e-8}
_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class DesignProblem:
    """Interval problem ``(I, mu_{alpha,beta}, P_n)`` or sphere problem ``(S^d, sigma, P_n)``."""

    space: str
    degree: int
    alpha: float = 0.0
    beta: float = 0.0
    d: int | None = None

    def __post_init__(self):
        if self.space not in ("interval", "sphere"):
            raise ArgumentError(f"unknown space {self.space!r}")
        if self.degree < 1:
            raise ArgumentError("degree must be >= 1")
        if self.space == "interval":
            orthopoly.JacobiParams(self.alpha, self.beta)
        elif self.d is None or self.d < 1:
            raise ArgumentError("sphere dimension d must be >= 1")

    @classmethod
    def interval(cls, alpha: float, beta: float, n: int) -> "DesignProblem":
        return cls("interval", int(n), float(alpha), float(beta))

    @classmethod
    def sphere(cls, d: int, n: int) -> "DesignProblem":
        return cls("sphere", int(n), d=int(d))

    @property
    def params(self) -> orthopoly.JacobiParams:
        return orthopoly.JacobiParams(self.alpha, self.beta)

    @property
    def ambient_dim(self) -> int:
        return 1 if self.space == "interval" else self.d + 1

    @property
    def basis_size(self) -> int:
        if self.space == "interval":
            return self.degree
        return harmonics.poly_space_dim(self.d, self.degree) - 1

    @property
    def default_tolerance(self) -> float:
        return DEFAULT_TOL[self.space]

    def check_points(self, points) -> np.ndarray:
        """Return points as an array, raising DomainError if any is off-domain."""
        pts = np.asarray(points, dtype=float)
        if self.space == "interval":
            pts = pts.reshape(-1)
            if np.any(np.abs(pts) > 1.0 + _UNIT_TOL) or not np.all(np.isfinite(pts)):
                raise DomainError("interval points must lie in [-1, 1]")
            return np.clip(pts, -1.0, 1.0)
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.d + 1:
            raise DomainError(f"sphere S^{self.d} points need {self.d + 1} coordinates")
        if np.any(np.abs(np.linalg.norm(pts, axis=1) - 1.0) > _UNIT_TOL):
            raise DomainError("sphere points must have unit norm")
        return pts

    def basis_values(self, points) -> np.ndarray:
        """Matrix ``B[i, j] = f_j(p_i)`` for the orthonormal zero-mean basis."""
        pts = self.check_points(points)
        if self.space == "interval":
            return orthopoly.orthonormal_table(self.params, self.degree, pts)[1:].T
        return harmonics.HarmonicBasis.get(self.d, self.degree).values(pts)

    def gram_matrix(self) -> np.ndarray:
        return np.eye(self.basis_size)

    def sample_grid(self, n_samples: int) -> np.ndarray:
        if self.space == "interval":
            return np.linspace(-1.0, 1.0, max(int(n_samples), 2))
        return sphere_grid(self.d, n_samples)

    def local_extremum(self, f: Callable, x0, sign: float, spacing: float):
        """Polish a grid extremum of ``sign * f`` near x0; returns (point, value)."""
        if self.space == "interval":
            return _scalar_extremum(f, float(x0), sign, spacing, -1.0, 1.0)
        return _sphere_extremum(f, np.asarray(x0, dtype=float), sign)


@dataclass
class CustomProblem:
    """Problem given by explicit zero-mean functions on an interval ``[lo, hi]``.

    The measure is ``density(x) dx`` normalized to total mass one (Lebesgue
    when ``density`` is None).  ``breakpoints`` mark kinks of the functions;
    they are added to sampling grids and used to split integrals.
    """

    functions: Sequence[Callable]
    lo: float = 0.0
    hi: float = 1.0
    breakpoints: Sequence[float] = ()
    density: Callable | None = None
    space: str = field(default="custom", init=False)

    @property
    def basis_size(self) -> int:
        return len(self.functions)

    def _pieces(self):
        cuts = sorted({self.lo, self.hi, *[b for b in self.breakpoints if self.lo < b < self.hi]})
        return list(zip(cuts[:-1], cuts[1:]))

    def _composite_rule(self, order: int = 24):
        x, w = np.polynomial.legendre.leggauss(order)
        nodes, weights = [], []
        for a, b in self._pieces():
            nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
            weights.append(0.5 * (b - a) * w)
        nodes = np.concatenate(nodes)
        weights = np.concatenate(weights)
        if self.density is not None:
            weights = weights * self.density(nodes)
        return nodes, weights / weights.sum()

    def basis_values(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1)
        return np.column_stack([np.asarray(f(pts), dtype=float) * np.ones_like(pts) for f in self.functions])

    def gram_matrix(self) -> np.ndarray:
        nodes, weights = self._composite_rule()
        B = self.basis_values(nodes)
        return B.T @ (weights[:, None] * B)

    def sample_grid(self, n_samples: int) -> np.ndarray:
        grid = np.linspace(self.lo, self.hi, max(int(n_samples), 2))
        extra = [b for b in self.breakpoints if self.lo <= b <= self.hi]
        return np.unique(np.concatenate([grid, extra]))

    def local_extremum(self, f, x0, sign, spacing):
        return _scalar_extremum(f, float(x0), sign, spacing, self.lo, self.hi)


@dataclass
class WeightedDesign:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.weights) != len(self.points):
            raise ArgumentError("points and weights differ in length")
        if np.any(self.weights < 0) or np.any(self.weights > 1):
            raise ArgumentError("weights must lie in [0, 1]")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ArgumentError(f"weights sum to {self.weights.sum()!r}, expected 1")
        if self.points.ndim == 2 and self.points.shape[1] > 1:
            if np.any(np.abs(np.linalg.norm(self.points, axis=1) - 1.0) > _UNIT_TOL):
                raise DomainError("sphere points must have unit norm")


@dataclass
class Design:
    """Equal-weight point set (each point carries weight 1/N)."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim == 2 and self.points.shape[1] > 1:
            if np.any(np.abs(np.linalg.norm(self.points, axis=1) - 1.0) > _UNIT_TOL):
                raise DomainError("sphere points must have unit norm")

    def __len__(self):
        return len(self.points)

    @property
    def N(self) -> int:
        return len(self.points)

    def as_weighted(self) -> WeightedDesign:
        n = len(self.points)
        return WeightedDesign(self.points, np.full(n, 1.0 / n))


@dataclass
class ResidualReport:
    residuals: np.ndarray
    sup_norm: float
    n_points: int

    @classmethod
    def from_residuals(cls, residuals, n_points: int) -> "ResidualReport":
        residuals = np.asarray(residuals, dtype=float)
        sup = float(np.max(np.abs(residuals))) if residuals.size else 0.0
        return cls(residuals=residuals, sup_norm=sup, n_points=int(n_points))

    def to_dict(self) -> dict:
        return {
            "residuals": [float(r) for r in self.residuals],
            "sup_norm": self.sup_norm,
            "n_points": self.n_points,
        }


def _points_of(design):
    if isinstance(design, (Design, WeightedDesign)):
        return design.points
    return np.asarray(design, dtype=float)


def moment_residual(problem: DesignProblem, design) -> ResidualReport:
    """Per-basis-function residuals of an equal-weight design.

    Interval problems report ``(1/N) sum_i R_k(p_i)`` for k = 1..n.  Sphere
    problems report the Gegenbauer residuals ``(1/N^2) sum_{i,j} G_k(<x_i, x_j>)``
    for k = 1..n, which vanish exactly when the degree-k moments do.
    """
    pts = _points_of(design)
    if pts.size == 0:
        raise ArgumentError("design is empty")
    pts = problem.check_points(pts)
    if problem.space == "interval":
        table = orthopoly.orthonormal_table(problem.params, problem.degree, pts)
        residuals = table[1:].mean(axis=1)
    else:
        residuals = harmonics.gegenbauer_residual(problem.d, problem.degree, pts)
    return ResidualReport.from_residuals(residuals, len(pts))


def verify_design(problem: DesignProblem, design, tol: float | None = None):
    """Return ``(passed, report)`` with ``passed`` true iff sup residual <= tol."""
    if tol is None:
        tol = problem.default_tolerance
    if not tol > 0:
        raise ArgumentError("tolerance must be positive")
    report = moment_residual(problem, design)
    return report.sup_norm <= tol, report


# --------------------------------------------------------------------------
# Caratheodory reduction
# --------------------------------------------------------------------------

def caratheodory_reduce(vectors, weights, tol: float = 1e-10):
    """Shrink a zero convex combination to at most M+1 vectors.

    ``vectors`` has shape (K, M).  Returns ``(indices, new_weights)`` with
    ``sum(new_weights[i] * vectors[indices[i]]) == 0`` and ``len(indices) <= M+1``.
    Elimination works on windows of M+2 active points: a null vector of the
    affine system ``[v; 1]`` is found by SVD and the weights are shifted
    along it until one of them hits zero.
    """
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    w = np.asarray(weights, dtype=float).reshape(-1).copy()
    if V.shape[0] != w.size or w.size == 0:
        raise ArgumentError("vectors and weights must be non-empty and of equal length")
    if np.any(w < 0):
        raise ArgumentError("weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-10:
        raise ArgumentError("weights must sum to 1")
    scale = max(1.0, float(np.abs(V).max()))
    combo = w @ V
    if np.linalg.norm(combo, np.inf) > tol * scale:
        raise ArgumentError(f"input combination is not zero (|sum w v| = {np.abs(combo).max():.3e})")

    M = V.shape[1]
    active = [i for i in range(w.size) if w[i] > 0]
    while len(active) > M + 1:
        window = active[: M + 2]
        A = np.vstack([V[window].T, np.ones(len(window))])
        try:
            _, s, vt = np.linalg.svd(A)
        except np.linalg.LinAlgError as exc:
            raise DegeneracyError(f"SVD failed on a window of {len(window)} points") from exc
        c = vt[-1]
        if not np.all(np.isfinite(c)) or np.abs(c).max() == 0:
            raise DegeneracyError(f"no usable null vector (singular values {s})")
        if c.max() <= 0:
            c = -c
        pos = c > 1e-14 * np.abs(c).max()
        ratios = np.full(len(window), np.inf)
        ratios[pos] = w[window][pos] / c[pos]
        t = ratios.min()
        killed = int(np.argmin(ratios))
        new_w = w[window] - t * c
        new_w[killed] = 0.0
        new_w[new_w < 0] = 0.0
        w[window] = new_w
        active = [i for i in active if w[i] > 0]

    idx = np.array(active, dtype=int)
    wk = w[idx]
    wk = _polish_weights(V[idx], wk)
    return idx, wk


def _polish_weights(V, w):
    """Least-change correction restoring ``sum w = 1`` and ``sum w v = 0``."""
    A = np.vstack([V.T, np.ones(len(w))])
    target = np.zeros(A.shape[0])
    target[-1] = 1.0
    defect = A @ w - target
    corr, *_ = np.linalg.lstsq(A, defect, rcond=None)
    polished = w - corr
    if np.all(polished >= 0) and np.linalg.norm(A @ polished - target) <= np.linalg.norm(defect):
        return polished
    return w / w.sum()


# --------------------------------------------------------------------------
# K estimation
# --------------------------------------------------------------------------

def sphere_grid(d: int, n_samples: int) -> np.ndarray:
    """Deterministic, roughly uniform point grid on S^d."""
    n_samples = max(int(n_samples), 2)
    if d == 1:
        t = 2 * np.pi * np.arange(n_samples) / n_samples
        return np.column_stack([np.cos(t), np.sin(t)])
    halton = qmc.Halton(d + 1, scramble=False).random(n_samples + 1)[1:]
    g = norm.ppf(np.clip(halton, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _scalar_extremum(f, x0, sign, spacing, lo, hi):
    a, b = max(lo, x0 - spacing), min(hi, x0 + spacing)
    best_x, best_v = x0, float(f(np.array([x0]))[0])
    if b > a:
        res = optimize.minimize_scalar(
            lambda t: -sign * float(f(np.array([t]))[0]),
            bounds=(a, b), method="bounded", options={"xatol": 1e-12},
        )
        v = float(f(np.array([res.x]))[0])
        if sign * v > sign * best_v:
            best_x, best_v = float(res.x), v
    return best_x, best_v


def _sphere_extremum(f, x0, sign):
    def obj(y):
        y = y / np.linalg.norm(y)
        return -sign * float(f(y[None, :])[0])

    best_v = float(f(x0[None, :])[0])
    res = optimize.minimize(obj, x0, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400})
    y = res.x / np.linalg.norm(res.x)
    v = float(f(y[None, :])[0])
    if sign * v > sign * best_v:
        return y, v
    return x0, best_v


def _ratio(sup, inf):
    if inf > -1e-12:
        return math.inf if sup > 1e-12 else 0.0
    return sup / abs(inf)


def estimate_K(problem, n_directions: int = 64, n_samples: int = 2001, seed: int = 0) -> float:
    """Sampled lower estimate of ``K = sup_{f in V} sup(f) / |inf(f)|``.

    Coefficient directions are drawn uniformly on the unit sphere of an
    orthonormalized basis (so the estimate does not depend on how the basis
    is scaled), each candidate ``f`` is maximized and minimized on a
    deterministic grid and polished locally, and every direction that beats
    the running best seeds a Nelder-Mead ascent in coefficient space.  For
    a fixed seed the result is nondecreasing in ``n_directions``.
    """
    if n_directions < 1 or n_samples < 1:
        raise ArgumentError("n_directions and n_samples must be >= 1")
    M = problem.basis_size
    gram = problem.gram_matrix()
    L = np.linalg.cholesky(gram)
    T = np.linalg.inv(L).T
    grid = problem.sample_grid(n_samples)
    Bt = problem.basis_values(grid) @ T
    spacing = _grid_spacing(problem, grid)

    def on_grid(z):
        vals = Bt @ z
        return _ratio(vals.max(), vals.min())

    def polished(z):
        vals = Bt @ z
        coeffs = T @ z

        def f(x):
            return problem.basis_values(x) @ coeffs

        _, sup = problem.local_extremum(f, grid[int(np.argmax(vals))], +1.0, spacing)
        _, inf = problem.local_extremum(f, grid[int(np.argmin(vals))], -1.0, spacing)
        return _ratio(max(sup, vals.max()), min(inf, vals.min()))

    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((int(n_directions), M))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)

    best = 0.0
    record = -np.inf
    for z in Z:
        for s in (1.0, -1.0):
            zz = s * z
            r = on_grid(zz)
            if math.isinf(r):
                if _ratio_is_infinite(polished, zz):
                    return math.inf
                continue
            best = max(best, polished(zz))
            if r > record:
                record = r
                best = max(best, _ascend(on_grid, polished, zz))
    return float(best)


def _ratio_is_infinite(polished, z):
    return math.isinf(polished(z))


def _ascend(on_grid, polished, z0):
    if z0.size == 1:
        return polished(z0)

    def obj(z):
        nz = np.linalg.norm(z)
        if nz == 0:
            return 0.0
        r = on_grid(z / nz)
        return -min(r, 1e12)

    res = optimize.minimize(obj, z0, method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 200 * z0.size})
    z = res.x / np.linalg.norm(res.x)
    return polished(z)


def _grid_spacing(problem, grid):
    if problem.space == "sphere":
        return 0.0
    g = np.sort(np.asarray(grid).reshape(-1))
    return float(np.max(np.diff(g))) if g.size > 1 else 1.0


# --------------------------------------------------------------------------
# Tightness fixture
# --------------------------------------------------------------------------

@dataclass
class TightnessFixture:
    """Piecewise-linear problem on ([0,1], Lebesgue) needing (m-1)(k+1) points.

    ``F`` equals ``k_eff`` on [0, 1/(2 k_eff)], falls linearly to -1 and is
    -1 from ``drop_end`` (<= 1/2) on.  Each ``phi_i`` is a unit-height tent
    of mass ``2 delta`` supported in [0, 1/(4 k_eff)], and
    ``f_i(x) = delta - phi_i(x) + phi_i(2(1 - x))``.
    """

    m: int
    k: float
    epsilon: float
    delta: float
    k_eff: float
    drop_end: float
    centers: np.ndarray
    half_width: float
    integrals: dict = field(default_factory=dict)

    def F(self, x):
        x = np.asarray(x, dtype=float)
        a = 1.0 / (2.0 * self.k_eff)
        b = self.drop_end
        return np.interp(x, [0.0, a, b, 1.0], [self.k_eff, self.k_eff, -1.0, -1.0])

    def phi(self, i: int, x):
        x = np.asarray(x, dtype=float)
        c = self.centers[i]
        return np.clip(1.0 - np.abs(x - c) / self.half_width, 0.0, None)

    def f(self, i: int, x):
        x = np.asarray(x, dtype=float)
        return self.delta - self.phi(i, x) + self.phi(i, 2.0 * (1.0 - x))

    def support(self, i: int):
        c = self.centers[i]
        return (c - self.half_width, c + self.half_width)

    @property
    def breakpoints(self):
        pts = [0.0, 1.0 / (2.0 * self.k_eff), self.drop_end, 1.0]
        for i in range(self.m - 1):
            lo, hi = self.support(i)
            c = self.centers[i]
            pts += [lo, c, hi, 1.0 - lo / 2.0, 1.0 - c / 2.0, 1.0 - hi / 2.0]
        return sorted(set(pts))

    @property
    def functions(self):
        fs = [self.F]
        for i in range(self.m - 1):
            fs.append(lambda x, i=i: self.f(i, x))
        return fs

    def as_problem(self) -> CustomProblem:
        return CustomProblem(self.functions, 0.0, 1.0, self.breakpoints)

    def integral(self, g) -> float:
        val, _ = integrate.quad(g, 0.0, 1.0, points=self.breakpoints[1:-1],
                                limit=400, epsabs=1e-13, epsrel=1e-13)
        return float(val)


def build_tightness_problem(m: int, k: float, epsilon: float, delta: float) -> TightnessFixture:
    """Construct the piecewise-linear tightness example.

    ``k`` is raised to ``k + epsilon/2`` before building ``F`` (and the
    bound target tightened to ``epsilon/2``): a continuous ``F`` with
    ``F = k`` on [0, 1/(2k)] and ``F = -1`` on [1/2, 1] cannot have zero
    mean when ``k = 1``.
    """
    if int(m) != m or m <= 1:
        raise ArgumentError("m must be an integer > 1")
    if k < 1 or not epsilon > 0 or not delta > 0:
        raise ArgumentError("need k >= 1, epsilon > 0, delta > 0")
    m = int(m)
    k_eff = k + epsilon / 2.0
    drop_end = (3.0 * k_eff - 1.0) / (2.0 * k_eff * (k_eff + 1.0))
    support_end = 1.0 / (4.0 * k_eff)
    half_width = 2.0 * delta
    spacing = support_end / m
    if spacing < 2.0 * half_width:
        raise ArgumentError(
            f"delta={delta} too large: {m - 1} tents of mass 2*delta do not fit in [0, {support_end:.4g}]"
        )
    centers = spacing * np.arange(1, m)
    fx = TightnessFixture(m, float(k), float(epsilon), float(delta), k_eff, drop_end, centers, half_width)

    fx.integrals["F"] = fx.integral(fx.F)
    for i in range(m - 1):
        fx.integrals[f"f{i + 1}"] = fx.integral(lambda x, i=i: fx.f(i, x))
        fx.integrals[f"phi{i + 1}"] = fx.integral(lambda x, i=i: fx.phi(i, x))
    bad = {name: v for name, v in fx.integrals.items()
           if (abs(v) if not name.startswith("phi") else abs(v - 2 * delta)) > 1e-9}
    if bad:
        raise ArgumentError(f"fixture integrals off target: {bad}")
    return fx
