"""Damped Gauss-Newton (Levenberg-Marquardt) used to polish quantized designs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

__all__ = ["RefinementConfig", "LMResult", "levenberg_marquardt"]


@dataclass(frozen=True)
class RefinementConfig:
    max_iterations: int = 200
    residual_target: float = 1e-12
    damping_initial: float = 1e-4
    damping_growth: float = 10.0
    damping_shrink: float = 0.25
    restarts: int = 8
    restart_seed: int = 0

    def __post_init__(self):
        if not self.residual_target > 0:
            raise ArgumentError("residual_target must be positive")
        if self.max_iterations < 0 or self.restarts < 0:
            raise ArgumentError("iteration and restart counts must be non-negative")
        if not (self.damping_growth > 1 and 0 < self.damping_shrink < 1):
            raise ArgumentError("need damping_growth > 1 and 0 < damping_shrink < 1")


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    iterations: int
    converged: bool


def _damped_step(J, r, lam):
    m, p = J.shape
    if m <= p:
        JJt = J @ J.T
        scale = max(np.trace(JJt) / m, 1e-300)
        y = np.linalg.solve(JJt + lam * scale * np.eye(m), r)
        return -J.T @ y
    JtJ = J.T @ J
    scale = max(np.trace(JtJ) / p, 1e-300)
    return -np.linalg.solve(JtJ + lam * scale * np.eye(p), J.T @ r)


def levenberg_marquardt(fun, jac, x0, retract, done, config: RefinementConfig) -> LMResult:
    """Drive ``fun(x)`` to zero.

    ``jac(x)`` returns the Jacobian with respect to local step coordinates,
    ``retract(x, step)`` maps a step back onto the feasible set and
    ``done(r)`` decides convergence.  Steps are accepted only when they
    decrease ``||r||``.
    """
    x = x0
    r = fun(x)
    lam = config.damping_initial
    it = 0
    while it < config.max_iterations:
        if done(r):
            return LMResult(x, r, it, True)
        J = jac(x)
        norm_r = np.linalg.norm(r)
        accepted = False
        while lam < 1e12:
            try:
                step = _damped_step(J, r, lam)
            except np.linalg.LinAlgError:
                lam *= config.damping_growth
                continue
            x_new = retract(x, step)
            r_new = fun(x_new)
            if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < norm_r:
                x, r = x_new, r_new
                lam = max(lam * config.damping_shrink, 1e-15)
                accepted = True
                break
            lam *= config.damping_growth
        it += 1
        if not accepted:
            break
    return LMResult(x, r, it, bool(done(r)))
