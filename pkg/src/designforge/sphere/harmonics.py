"""Gegenbauer kernels, product quadrature and an orthonormal polynomial basis on S^d.

The sphere measure is always the normalized surface measure.  ``G_k`` is the
degree-k Gegenbauer polynomial for S^d scaled so that ``G_k(1) = 1``; by the
addition theorem ``sum_m Y_km(x) Y_km(y) = dim_k * G_k(<x, y>)`` for any
orthonormal basis ``Y_k1..`` of the degree-k harmonics.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb

import numpy as np

from .. import orthopoly
from ..errors import DomainError

__all__ = [
    "harmonic_dim",
    "poly_space_dim",
    "gegenbauer_table",
    "gegenbauer_residual",
    "residual_objective",
    "product_rule",
    "HarmonicBasis",
    "tangent_basis",
]

_UNIT_TOL = 1e-10


def harmonic_dim(d: int, k: int) -> int:
    """Dimension of the degree-k spherical harmonics on S^d."""
    if k == 0:
        return 1
    if k == 1:
        return d + 1
    return comb(k + d, d) - comb(k + d - 2, d)


def poly_space_dim(d: int, n: int) -> int:
    """Dimension of polynomials of degree <= n restricted to S^d."""
    if n == 0:
        return 1
    return comb(n + d, d) + comb(n + d - 1, d)


def gegenbauer_table(d: int, n: int, t, derivative: bool = False):
    """Rows ``G_0 .. G_n`` at t for S^d (lambda = (d-1)/2), normalized to G_k(1) = 1."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    lam = 0.5 * (d - 1)
    out = np.empty((n + 1,) + t.shape)
    dout = np.zeros_like(out) if derivative else None
    out[0] = 1.0
    if n >= 1:
        out[1] = t
        if derivative:
            dout[1] = 1.0
    for k in range(1, n):
        # (k + 2 lam) G_{k+1} = 2 (k + lam) t G_k - k G_{k-1}
        out[k + 1] = (2 * (k + lam) * t * out[k] - k * out[k - 1]) / (k + 2 * lam)
        if derivative:
            dout[k + 1] = (2 * (k + lam) * (out[k] + t * dout[k]) - k * dout[k - 1]) / (k + 2 * lam)
    if derivative:
        return out, dout
    return out


def _check_unit(points):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(np.abs(np.linalg.norm(pts, axis=1) - 1.0) > _UNIT_TOL):
        raise DomainError("points must have unit norm")
    return pts


def _row_blocks(N, max_entries=2_000_000):
    step = max(1, max_entries // max(N, 1))
    for start in range(0, N, step):
        yield slice(start, min(N, start + step))


def gegenbauer_residual(d: int, n: int, points) -> np.ndarray:
    """Vector ``(1/N^2) sum_{i,j} G_k(<x_i, x_j>)`` for k = 1..n.

    Each entry equals ``|m_k|^2 / dim_k`` where ``m_k`` is the vector of
    degree-k harmonic moments, so it is non-negative and vanishes exactly
    when the degree-k moments do.
    """
    pts = _check_unit(points)
    N = len(pts)
    total = np.zeros(n + 1)
    for rows in _row_blocks(N):
        gram = pts[rows] @ pts.T
        total += gegenbauer_table(d, n, gram).reshape(n + 1, -1).sum(axis=1)
    return total[1:] / N**2


def tangent_basis(points) -> np.ndarray:
    """Orthonormal bases of the tangent spaces, shape (N, D-1, D)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    N, D = pts.shape
    frame = np.concatenate([pts[:, :, None], np.broadcast_to(np.eye(D), (N, D, D))], axis=2)
    # complete each x to an orthonormal frame; columns 1..D-1 span x-perp
    q, _ = np.linalg.qr(frame)
    return np.transpose(q[:, :, 1:D], (0, 2, 1))


def residual_objective(d: int, n: int, points, gradient: bool = True):
    """Sum of Gegenbauer residuals and its ambient gradient projected to the tangent spaces.

    Returns ``(value, grad)`` with grad of shape (N, D); each row is
    orthogonal to its point.
    """
    pts = _check_unit(points)
    N = len(pts)
    value = 0.0
    grad = np.zeros_like(pts)
    for rows in _row_blocks(N):
        gram = pts[rows] @ pts.T
        if gradient:
            tab, dtab = gegenbauer_table(d, n, gram, derivative=True)
            value += tab[1:].sum()
            s_prime = dtab[1:].sum(axis=0)
            grad[rows] = 2.0 * (s_prime @ pts)
        else:
            value += gegenbauer_table(d, n, gram)[1:].sum()
    value /= N**2
    if not gradient:
        return value
    grad /= N**2
    grad -= np.sum(grad * pts, axis=1, keepdims=True) * pts
    return value, grad


def product_rule(d: int, degree: int):
    """Positive rule on S^d exact for polynomials of total degree <= degree.

    Built recursively: a Gauss-Jacobi rule in the last coordinate with weight
    ``(1 - t^2)^((d-2)/2)`` times a scaled rule on S^{d-1}; S^1 uses
    ``degree + 1`` equally spaced angles.  Returns ``(nodes, weights)``.
    """
    if d == 1:
        m = degree + 1
        theta = 2 * np.pi * (np.arange(m) + 0.5) / m
        return np.column_stack([np.cos(theta), np.sin(theta)]), np.full(m, 1.0 / m)
    q = max(1, (degree + 2) // 2)
    a = 0.5 * (d - 2)
    rule = orthopoly.gauss_jacobi_rule((a, a), q)
    sub_nodes, sub_w = product_rule(d - 1, degree)
    nodes, weights = [], []
    for t, wt in zip(rule.nodes, rule.weights):
        s = np.sqrt(max(0.0, 1.0 - t * t))
        nodes.append(np.column_stack([s * sub_nodes, np.full(len(sub_nodes), t)]))
        weights.append(wt * sub_w)
    nodes = np.vstack(nodes)
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    return nodes, np.concatenate(weights)


def _exponents(D, deg):
    out = []
    for combo in itertools.combinations_with_replacement(range(D), deg):
        e = np.zeros(D, dtype=int)
        for c in combo:
            e[c] += 1
        out.append(e)
    return out


def _monomials(pts, E):
    return np.prod(pts[:, None, :] ** E[None, :, :], axis=2)


def _monomial_grads(pts, E):
    N, D = pts.shape
    out = np.empty((N, E.shape[0], D))
    for l in range(D):
        El = E.copy()
        El[:, l] = np.maximum(El[:, l] - 1, 0)
        out[:, :, l] = E[None, :, l] * _monomials(pts, El)
    return out


class HarmonicBasis:
    """Orthonormal basis of the zero-mean polynomials of degree <= n on S^d.

    Monomials of degree n and n-1 span all polynomials of degree <= n on the
    sphere.  They are centred against an exact product rule and
    orthonormalized by SVD, which drops the one direction spent on the
    constant.
    """

    def __init__(self, d: int, n: int):
        self.d, self.n = d, n
        D = d + 1
        self.exponents = np.array(_exponents(D, n) + (_exponents(D, n - 1) if n >= 1 else []))
        nodes, w = product_rule(d, 2 * n)
        mono = _monomials(nodes, self.exponents)
        self.mean = w @ mono
        A = np.sqrt(w)[:, None] * (mono - self.mean)
        _, s, vt = np.linalg.svd(A, full_matrices=False)
        self.size = poly_space_dim(d, n) - 1
        self.coeffs = vt[: self.size].T / s[: self.size]
        self.singular_values = s

    @classmethod
    def get(cls, d: int, n: int) -> "HarmonicBasis":
        return _cached_basis(d, n)

    def values(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (_monomials(pts, self.exponents) - self.mean) @ self.coeffs

    def gradients(self, points) -> np.ndarray:
        """Ambient gradients, shape (N, M, D)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        g = _monomial_grads(pts, self.exponents)
        return np.einsum("nmd,mk->nkd", g, self.coeffs)


@lru_cache(maxsize=32)
def _cached_basis(d, n):
    return HarmonicBasis(d, n)
