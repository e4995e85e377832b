"""Scaled conjugate gradient minimization (Moller, 1993).

Conjugate directions with a Levenberg-Marquardt style scale ``lam`` that
replaces the line search: second-order information along the search direction
comes from one extra gradient evaluation per successful step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

SIGMA0 = 1e-4
LAMBDA_INIT = 1e-6
LAMBDA_MIN = 1e-15
LAMBDA_MAX = 1e100


class DivergenceError(FloatingPointError):
    def __init__(self, iteration: int, value: float):
        super().__init__(f"objective became non-finite ({value}) at iteration {iteration}")
        self.iteration = iteration
        self.value = value


@dataclass
class ScgResult:
    x: np.ndarray
    fun: float
    iterations: int
    message: str


def scg_minimize(
    fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    max_iter: int = 1000,
    grad_tol: float = 1e-8,
    callback: Callable[[int, np.ndarray, float], bool] | None = None,
) -> ScgResult:
    """Minimize ``f`` given ``fun_grad(x) -> (f(x), grad f(x))``.

    ``callback(iteration, x, f)`` runs after every accepted step; returning
    True stops the iteration.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    f, g = fun_grad(x)
    if not np.isfinite(f):
        raise DivergenceError(0, f)
    r = -g
    p = r.copy()
    lam, lam_bar = LAMBDA_INIT, 0.0
    success = True
    delta = 0.0
    since_restart = 0

    for it in range(1, max_iter + 1):
        p2 = float(p @ p)
        if p2 == 0.0 or np.sqrt(float(r @ r)) < grad_tol:
            return ScgResult(x, f, it - 1, "gradient below tolerance")
        if success:
            sigma = SIGMA0 / np.sqrt(p2)
            _, g_sigma = fun_grad(x + sigma * p)
            delta = float(p @ (g_sigma - g)) / sigma

        # scale the curvature estimate and force it positive
        d = delta + (lam - lam_bar) * p2
        if d <= 0:
            lam_bar = 2.0 * (lam - d / p2)
            d = -d + lam * p2
            lam = lam_bar

        mu = float(p @ r)
        alpha = mu / d
        x_new = x + alpha * p
        f_new, g_new = fun_grad(x_new)
        if not np.isfinite(f_new):
            raise DivergenceError(it, f_new)
        comparison = 2.0 * d * (f - f_new) / (mu * mu) if mu != 0 else -1.0

        if comparison >= 0:
            r_new = -g_new
            since_restart += 1
            if since_restart >= n:
                p_new = r_new.copy()
                since_restart = 0
            else:
                beta = (float(r_new @ r_new) - float(r_new @ r)) / mu
                p_new = r_new + beta * p
            x, f, g, r, p = x_new, f_new, g_new, r_new, p_new
            lam_bar = 0.0
            success = True
            if comparison >= 0.75:
                lam = max(0.25 * lam, LAMBDA_MIN)
            if callback is not None and callback(it, x, f):
                return ScgResult(x, f, it, "stopped by callback")
        else:
            lam_bar = lam
            success = False

        if comparison < 0.25:
            lam = min(lam + d * (1.0 - comparison) / p2, LAMBDA_MAX)
        if lam >= LAMBDA_MAX:
            return ScgResult(x, f, it, "scale parameter saturated")

    return ScgResult(x, f, max_iter, "maximum iterations reached")
