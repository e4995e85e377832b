"""Logistic regression fitted by iteratively reweighted least squares."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ann import sigmoid

RIDGE = 1e-8
SEPARATION_LIMIT = 1e4


@dataclass(frozen=True, eq=False)
class LogRegModel:
    weights: np.ndarray
    intercept: float
    iterations: int = 0
    converged: bool = True
    separated: bool = False
    flags: tuple[str, ...] = field(default=())

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return sigmoid(X @ self.weights + self.intercept)

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int64)


def train_logreg(X, T, max_iter: int = 100, tol: float = 1e-8) -> LogRegModel:
    """Newton/IRLS iterations from ``w = 0`` on ``[X, 1]``.

    Each step solves ``(A^T S A + 1e-8 I) w_new = A^T (S A w + T - Y)`` with
    ``S = diag(y (1 - y))``. Stops when the largest coefficient change drops
    below ``tol``. Perfect separation shows up as coefficients growing past
    1e4, at which point the fit stops and is flagged.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.asarray(T, dtype=float)
    if X.shape[0] != T.size:
        raise ValueError("feature rows and labels differ in number")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(T))):
        raise ValueError("data must be finite")
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    w = np.zeros(A.shape[1])
    ridge = RIDGE * np.eye(A.shape[1])
    flags = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = A @ w
        y = sigmoid(eta)
        s = y * sigmoid(-eta)
        rhs = A.T @ (s * eta + T - y)
        w_new = np.linalg.solve((A.T * s) @ A + ridge, rhs)
        step = np.max(np.abs(w_new - w))
        w = w_new
        if np.max(np.abs(w)) > SEPARATION_LIMIT:
            flags.append("perfect separation: coefficients diverging")
            break
        if step < tol:
            converged = True
            break
    else:
        flags.append(f"no convergence after {max_iter} iterations")
    separated = bool(flags and flags[0].startswith("perfect separation"))
    if np.all(T == T[0]):
        flags.append("single class: intercept heads to infinity (perfect-fit degenerate case)")
        separated = True
    elif not separated and np.all(np.abs(sigmoid(A @ w) - T) < 1e-6):
        flags.append("perfect separation: fitted probabilities saturate at the labels")
        separated = True
    return LogRegModel(w[:-1].copy(), float(w[-1]), it, converged, separated, tuple(flags))
