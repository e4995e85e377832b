"""Two-layer sigmoid network for paired-correlation features.

The loss is mean binary cross-entropy plus ``lam * sum(|W1|)``. Only the
input-to-hidden weights are penalized, so each feature's column of ``W1``
shrinks as a group toward zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import PairedDataset

LOG_FLOOR = 1e-12


def sigmoid(u):
    """Logistic function without overflow for large ``|u|``."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass(frozen=True, eq=False)
class AnnModel:
    W1: np.ndarray  # (H, M)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H,)
    b2: float
    threshold: float = 0.5
    # affine input map x -> (x - input_offset) * input_scale applied before W1
    input_offset: np.ndarray | None = None
    input_scale: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        W1 = np.atleast_2d(np.asarray(self.W1, dtype=float))
        H, M = W1.shape
        b1 = np.asarray(self.b1, dtype=float).reshape(H)
        w2 = np.asarray(self.w2, dtype=float).reshape(H)
        if not (0.0 < self.threshold < 1.0):
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")
        offset = np.zeros(M) if self.input_offset is None else np.asarray(self.input_offset, dtype=float).reshape(M)
        scale = np.ones(M) if self.input_scale is None else np.asarray(self.input_scale, dtype=float).reshape(M)
        for name, arr in (("W1", W1), ("b1", b1), ("w2", w2), ("input_offset", offset), ("input_scale", scale)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        if not np.isfinite(self.b2):
            raise ValueError("b2 is not finite")
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "b2", float(self.b2))
        object.__setattr__(self, "input_offset", offset)
        object.__setattr__(self, "input_scale", scale)

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def n_params(self) -> int:
        H, M = self.W1.shape
        return H * M + 2 * H + 1

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.w2, [self.b2]])

    def with_flat(self, theta) -> "AnnModel":
        H, M = self.W1.shape
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {theta.shape}")
        i = H * M
        return replace(
            self,
            W1=theta[:i].reshape(H, M),
            b1=theta[i:i + H],
            w2=theta[i + H:i + 2 * H],
            b2=float(theta[-1]),
        )

    def with_threshold(self, threshold: float) -> "AnnModel":
        return replace(self, threshold=float(threshold))

    def to_dict(self) -> dict:
        return {
            "W1": self.W1.tolist(), "b1": self.b1.tolist(), "w2": self.w2.tolist(), "b2": self.b2,
            "threshold": self.threshold, "input_offset": self.input_offset.tolist(),
            "input_scale": self.input_scale.tolist(),
        }


def init_model(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> AnnModel:
    """Gaussian initialization with std ``1/sqrt(fan_in)`` per layer, biases included."""
    W1 = rng.normal(0.0, 1.0 / np.sqrt(input_dim), (hidden_dim, input_dim))
    b1 = rng.normal(0.0, 1.0 / np.sqrt(input_dim), hidden_dim)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden_dim), hidden_dim)
    b2 = rng.normal(0.0, 1.0 / np.sqrt(hidden_dim))
    return AnnModel(W1, b1, w2, b2)


def _as_batch(model: AnnModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.input_dim:
        raise ValueError(f"model expects {model.input_dim} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains non-finite values")
    return X, single


def ann_forward(model: AnnModel, x):
    """Network output in (0, 1) for one feature vector or a batch of rows."""
    X, single = _as_batch(model, x)
    hidden = sigmoid(((X - model.input_offset) * model.input_scale) @ model.W1.T + model.b1)
    out = sigmoid(hidden @ model.w2 + model.b2)
    return float(out[0]) if single else out


def _cross_entropy(a2: np.ndarray, T: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy from output pre-activations and its derivative wrt them."""
    y = sigmoid(a2)
    ybar = sigmoid(-a2)  # 1 - y without cancellation
    n = T.size
    ce = -(T * np.log(np.maximum(y, LOG_FLOOR)) + (1 - T) * np.log(np.maximum(ybar, LOG_FLOOR)))
    # floored branches are constant, so they contribute no slope
    d = (-T * ybar * (y > LOG_FLOOR) + (1 - T) * y * (ybar > LOG_FLOOR)) / n
    return float(ce.mean()), d


def data_loss(model: AnnModel, data: PairedDataset) -> float:
    """Mean cross-entropy without the penalty."""
    X, _ = _as_batch(model, data.X)
    hidden = sigmoid(((X - model.input_offset) * model.input_scale) @ model.W1.T + model.b1)
    return _cross_entropy(hidden @ model.w2 + model.b2, data.T)[0]


def ann_loss(model: AnnModel, data: PairedDataset, lam: float) -> float:
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if len(data) == 0:
        raise ValueError("empty batch")
    return data_loss(model, data) + lam * float(np.abs(model.W1).sum())


def loss_and_gradient(model: AnnModel, data: PairedDataset, lam: float) -> tuple[float, np.ndarray]:
    """Loss and flat gradient (same layout as :meth:`AnnModel.flat`).

    The L1 term contributes ``lam * sign(W1)`` with ``sign(0) = 0``.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    X, _ = _as_batch(model, data.X)
    Xs = (X - model.input_offset) * model.input_scale
    hidden = sigmoid(Xs @ model.W1.T + model.b1)
    ce, d2 = _cross_entropy(hidden @ model.w2 + model.b2, data.T)
    g_w2 = hidden.T @ d2
    g_b2 = d2.sum()
    d1 = np.outer(d2, model.w2) * hidden * (1.0 - hidden)
    g_W1 = d1.T @ Xs + lam * np.sign(model.W1)
    g_b1 = d1.sum(axis=0)
    loss = ce + lam * float(np.abs(model.W1).sum())
    return loss, np.concatenate([g_W1.ravel(), g_b1, g_w2, [g_b2]])


def ann_gradient(model: AnnModel, data: PairedDataset, lam: float) -> np.ndarray:
    if len(data) == 0:
        raise ValueError("empty batch")
    return loss_and_gradient(model, data, lam)[1]


def classify(model: AnnModel, x, threshold: float | None = None):
    """1 (MZ) when the network output reaches the threshold, else 0."""
    theta = model.threshold if threshold is None else threshold
    out = ann_forward(model, x)
    if np.ndim(out) == 0:
        return int(out >= theta)
    return (out >= theta).astype(np.int64)
