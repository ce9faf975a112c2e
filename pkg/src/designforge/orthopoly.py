"""Jacobi polynomials and Gauss-Jacobi quadrature.

The measure ``mu_{alpha,beta}`` is the probability measure on [-1, 1] with
density proportional to ``(1 - x)**alpha * (1 + x)**beta``.  ``P_n`` denotes
the classical Jacobi polynomial with ``P_n(1) = binom(n + alpha, n)`` and
``R_n = P_n / ||P_n||`` its unit-norm version with respect to ``mu``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import ArgumentError, DesignForgeError, DomainError

__all__ = [
    "JacobiParams",
    "QuadratureRule",
    "jacobi_eval",
    "jacobi_l2_norm_sq",
    "recurrence_coefficients",
    "orthonormal_table",
    "gauss_jacobi_rule",
    "shifted_rule_01",
    "measure_density",
]

_ENDPOINT_SLACK = 1e-12


@dataclass(frozen=True)
class JacobiParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha >= -0.5 and self.beta >= -0.5):
            raise ArgumentError(
                f"Jacobi parameters must be >= -1/2, got ({self.alpha}, {self.beta})"
            )

    @property
    def reflected(self) -> "JacobiParams":
        return JacobiParams(self.beta, self.alpha)


@dataclass(frozen=True)
class QuadratureRule:
    """Positive quadrature rule for a probability measure.

    ``domain`` is ``(-1, 1)`` for Jacobi rules and ``(0, 1)`` for the
    shifted rules used by the radial half-designs.
    """

    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int
    domain: tuple = (-1.0, 1.0)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f):
        """Apply the rule to a vectorized callable."""
        return float(np.dot(self.weights, f(self.nodes)))


def _as_params(params):
    if isinstance(params, JacobiParams):
        return params
    alpha, beta = params
    return JacobiParams(float(alpha), float(beta))


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + _ENDPOINT_SLACK):
        raise DomainError("Jacobi polynomials are evaluated on [-1, 1] only")
    return x


def _classical(alpha, beta, degree, x):
    """Three-term recurrence for the classical P_n^{(alpha, beta)}."""
    p_prev = np.ones_like(x)
    if degree == 0:
        return p_prev
    ab = alpha + beta
    p = (alpha + 1.0) + 0.5 * (ab + 2.0) * (x - 1.0)
    for k in range(2, degree + 1):
        c = 2.0 * k + ab
        a1 = 2.0 * k * (k + ab) * (c - 2.0)
        a2 = (c - 1.0) * (alpha * alpha - beta * beta)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c
        p_prev, p = p, ((a2 + a3 * x) * p - a4 * p_prev) / a1
    return p


def jacobi_l2_norm_sq(params, degree: int) -> float:
    """Squared norm of P_n against the normalized measure mu_{alpha,beta}.

    Evaluated in log space so that large degrees do not overflow.
    """
    p = _as_params(params)
    if degree < 0:
        raise ArgumentError("degree must be non-negative")
    if degree == 0:
        return 1.0
    a, b, n = p.alpha, p.beta, degree
    log_val = (
        gammaln(n + a + 1) + gammaln(n + b + 1) + gammaln(a + b + 2)
        - np.log(2 * n + a + b + 1) - gammaln(n + 1) - gammaln(n + a + b + 1)
        - gammaln(a + 1) - gammaln(b + 1)
    )
    if log_val > np.log(np.finfo(float).max):
        raise OverflowError(f"norm of P_{n}^({a},{b}) overflows")
    return float(np.exp(log_val))


def jacobi_eval(params, degree: int, x, normalized: bool = False):
    """Value and derivative of ``P_n`` (or ``R_n`` when ``normalized``) at x.

    ``x`` may be a scalar or an array; the outputs follow its shape.
    """
    p = _as_params(params)
    if degree < 0:
        raise ArgumentError("degree must be non-negative")
    xa = _check_x(x)
    value = _classical(p.alpha, p.beta, degree, xa)
    if degree == 0:
        deriv = np.zeros_like(xa)
    else:
        # d/dx P_n^{(a,b)} = (n + a + b + 1)/2 * P_{n-1}^{(a+1,b+1)}
        deriv = 0.5 * (degree + p.alpha + p.beta + 1.0) * _classical(
            p.alpha + 1.0, p.beta + 1.0, degree - 1, xa
        )
    if normalized:
        scale = 1.0 / np.sqrt(jacobi_l2_norm_sq(p, degree))
        value = value * scale
        deriv = deriv * scale
    if np.ndim(x) == 0:
        return float(value), float(deriv)
    return value, deriv


def recurrence_coefficients(alpha: float, beta: float, n: int):
    """Diagonal ``b[0..n-1]`` and off-diagonal ``a[1..n-1]`` of the Jacobi matrix.

    With these, the orthonormal polynomials satisfy
    ``x R_k = a[k+1] R_{k+1} + b[k] R_k + a[k] R_{k-1}``.  The returned ``a``
    has length ``n`` with ``a[0] = 0`` so that indices line up.
    Valid for alpha, beta > -1.
    """
    ab = alpha + beta
    k = np.arange(n, dtype=float)
    b = np.empty(n)
    a = np.zeros(n)
    if n == 0:
        return b, a
    b[0] = (beta - alpha) / (ab + 2.0)
    if n > 1:
        kk = k[1:]
        b[1:] = (beta**2 - alpha**2) / ((2 * kk + ab) * (2 * kk + ab + 2.0))
        a[1] = np.sqrt(4.0 * (1 + alpha) * (1 + beta) / ((2.0 + ab) ** 2 * (3.0 + ab)))
        if n > 2:
            kk = k[2:]
            c = 2 * kk + ab
            a[2:] = np.sqrt(
                4.0 * kk * (kk + alpha) * (kk + beta) * (kk + ab)
                / (c**2 * (c + 1.0) * (c - 1.0))
            )
    return b, a


def orthonormal_table(params, nmax: int, x, derivative: bool = False):
    """Rows ``R_0 .. R_nmax`` evaluated at x via the orthonormal recurrence.

    Returns an array of shape ``(nmax + 1, len(x))``; with ``derivative`` a
    second array of the same shape holds ``R_k'``.
    """
    p = _as_params(params)
    return _orthonormal_table(p.alpha, p.beta, nmax, _check_x(np.atleast_1d(x)), derivative)


def _orthonormal_table(alpha, beta, nmax, x, derivative=False):
    b, a = recurrence_coefficients(alpha, beta, nmax + 1)
    vals = np.empty((nmax + 1, x.size))
    vals[0] = 1.0
    ders = np.zeros((nmax + 1, x.size)) if derivative else None
    if nmax >= 1:
        vals[1] = (x - b[0]) / a[1]
        if derivative:
            ders[1] = 1.0 / a[1]
    for k in range(1, nmax):
        vals[k + 1] = ((x - b[k]) * vals[k] - a[k] * vals[k - 1]) / a[k + 1]
        if derivative:
            ders[k + 1] = (vals[k] + (x - b[k]) * ders[k] - a[k] * ders[k - 1]) / a[k + 1]
    if derivative:
        return vals, ders
    return vals


def _christoffel(alpha, beta, n, x):
    """R_n(x), R_n'(x) and sum_{j<n} R_j(x)^2 without storing the table."""
    b, a = recurrence_coefficients(alpha, beta, n + 1)
    r_prev = np.zeros_like(x)
    d_prev = np.zeros_like(x)
    r = np.ones_like(x)
    d = np.zeros_like(x)
    total = np.zeros_like(x)
    for k in range(n):
        total += r * r
        r_next = ((x - b[k]) * r - a[k] * r_prev) / a[k + 1]
        d_next = (r + (x - b[k]) * d - a[k] * d_prev) / a[k + 1]
        r_prev, r = r, r_next
        d_prev, d = d, d_next
    return r, d, total


def _gauss_jacobi(alpha: float, beta: float, n: int) -> QuadratureRule:
    if n < 1:
        raise ArgumentError("quadrature order must be >= 1")
    b, a = recurrence_coefficients(alpha, beta, n)
    if n == 1:
        nodes = b[:1].copy()
    else:
        try:
            nodes = eigh_tridiagonal(b, a[1:], eigvals_only=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise DesignForgeError(f"tridiagonal eigensolve failed for n={n}") from exc
    # one Newton step on R_n tightens the eigenvalues to working precision
    r, d, _ = _christoffel(alpha, beta, n, nodes)
    step = np.where(d != 0, r / np.where(d != 0, d, 1.0), 0.0)
    if np.all(np.abs(step) < 1e-10):
        nodes = nodes - step
    nodes = np.sort(np.clip(nodes, -1.0, 1.0))
    _, _, total = _christoffel(alpha, beta, n, nodes)
    weights = 1.0 / total
    return QuadratureRule(nodes=nodes, weights=weights, exact_degree=2 * n - 1)


def gauss_jacobi_rule(params, n: int) -> QuadratureRule:
    """n-point Gauss-Jacobi rule for mu_{alpha,beta} on [-1, 1].

    Nodes are the roots of R_n (Golub-Welsch eigenvalues, polished by one
    Newton step); weights are ``1 / sum_{j<n} R_j(r_i)^2``.
    """
    p = _as_params(params)
    return _gauss_jacobi(p.alpha, p.beta, n)


def shifted_rule_01(p: float, q: float, n: int) -> QuadratureRule:
    """Gauss rule on [0, 1] for the probability measure proportional to s^p (1-s)^q."""
    if not (p > -1.0 and q > -1.0):
        raise ArgumentError(f"exponents must exceed -1, got p={p}, q={q}")
    rule = _gauss_jacobi(float(q), float(p), n)
    nodes = 0.5 * (rule.nodes + 1.0)
    weights = rule.weights / rule.weights.sum()
    return QuadratureRule(nodes=nodes, weights=weights, exact_degree=rule.exact_degree, domain=(0.0, 1.0))


def measure_density(params, x):
    """Density of mu_{alpha,beta} with respect to dx on [-1, 1]."""
    p = _as_params(params)
    x = np.asarray(x, dtype=float)
    log_c = (
        gammaln(p.alpha + p.beta + 2) - (p.alpha + p.beta + 1) * np.log(2.0)
        - gammaln(p.alpha + 1) - gammaln(p.beta + 1)
    )
    return np.exp(log_c) * (1.0 - x) ** p.alpha * (1.0 + x) ** p.beta
