from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .ann import AnnModel, ann_forward, classify, data_loss, init_model, loss_and_gradient
from .dataset import PairedDataset
from .scg import scg_minimize

THRESHOLD_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
INPUT_SCALINGS = ("minmax", "none")


@dataclass(frozen=True)
class TrainingConfig:
    hidden: int = 200
    lam: float = 0.01
    max_iterations: int = 1000
    patience: int = 6
    grad_tol: float = 1e-8
    input_scaling: str = "minmax"

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError("hidden width must be positive")
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")
        if self.max_iterations < 1 or self.patience < 1:
            raise ValueError("iteration and patience counts must be positive")
        if self.input_scaling not in INPUT_SCALINGS:
            raise ValueError(f"input_scaling must be one of {INPUT_SCALINGS}")

    def replace(self, **changes) -> "TrainingConfig":
        return replace(self, **changes)


def minmax_map(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Offset and scale taking each training column onto [-1, 1]."""
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    span = hi - lo
    flat = span == 0
    scale = np.where(flat, 1.0, 2.0 / np.where(flat, 1.0, span))
    offset = np.where(flat, lo, (lo + hi) / 2.0)
    return offset, scale


class EarlyStopping:
    """Tracks validation loss after each accepted step and keeps the best parameters."""

    def __init__(self, model: AnnModel, validation: PairedDataset, patience: int):
        self.model = model
        self.validation = validation
        self.patience = patience
        self.best_loss = data_loss(model, validation)
        self.best_theta = model.flat()
        self.best_iteration = 0
        self.stale = 0

    def __call__(self, iteration: int, theta: np.ndarray, _f: float) -> bool:
        loss = data_loss(self.model.with_flat(theta), self.validation)
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_theta = theta.copy()
            self.best_iteration = iteration
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.patience


def train_ann(train: PairedDataset, validation: PairedDataset, cfg: TrainingConfig,
              rng: np.random.Generator) -> AnnModel:
    """Full-batch SCG on the penalized loss with validation early stopping.

    Returns the parameters with the lowest validation cross-entropy seen.
    Raises :class:`DivergenceError` if the loss becomes non-finite.
    """
    if len(train) == 0 or len(validation) == 0:
        raise ValueError("train and validation sets must be non-empty")
    if train.n_features != validation.n_features:
        raise ValueError("train and validation feature counts differ")
    model = init_model(train.n_features, cfg.hidden, rng)
    if cfg.input_scaling == "minmax":
        offset, scale = minmax_map(train.X)
        model = replace(model, input_offset=offset, input_scale=scale)

    stopper = EarlyStopping(model, validation, cfg.patience)
    result = scg_minimize(
        lambda theta: loss_and_gradient(model.with_flat(theta), train, cfg.lam),
        model.flat(),
        max_iter=cfg.max_iterations,
        grad_tol=cfg.grad_tol,
        callback=stopper,
    )
    best = model.with_flat(stopper.best_theta)
    return replace(best, info={
        "iterations": result.iterations,
        "best_iteration": stopper.best_iteration,
        "best_validation_loss": stopper.best_loss,
        "stop_reason": "validation patience exhausted" if stopper.stale >= cfg.patience else result.message,
    })


@dataclass(frozen=True)
class ThresholdChoice:
    threshold: float
    accuracy: float
    single_class: bool


def tune_threshold(model: AnnModel, validation: PairedDataset) -> ThresholdChoice:
    """Grid threshold maximizing validation accuracy; ties go to the value nearest 0.5
    (the lower one if two are equally near)."""
    if len(validation) == 0:
        raise ValueError("empty validation set")
    out = model_output(model, validation)
    if np.all(validation.T == validation.T[0]):
        # accuracy cannot rank thresholds when only one class is present
        return ThresholdChoice(0.5, float(np.mean((out >= 0.5) == validation.T)), True)
    best = None
    for theta in THRESHOLD_GRID:
        acc = float(np.mean((out >= theta).astype(np.int64) == validation.T))
        key = (-acc, abs(theta - 0.5), theta)
        if best is None or key < best[0]:
            best = (key, theta, acc)
    return ThresholdChoice(best[1], best[2], False)


def model_output(model: AnnModel, data: PairedDataset) -> np.ndarray:
    return np.atleast_1d(ann_forward(model, data.X))


@dataclass(frozen=True)
class Metrics:
    """Confusion counts with MZ (label 1) as the positive class.

    A rate whose denominator is zero is NaN and listed in ``undefined``.
    """

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return 1.0 - (self.fp + self.fn) / self.n

    @property
    def fpr(self) -> float:
        denom = self.fp + self.tn
        return self.fp / denom if denom else math.nan

    @property
    def fnr(self) -> float:
        denom = self.fn + self.tp
        return self.fn / denom if denom else math.nan

    @property
    def undefined(self) -> tuple[str, ...]:
        return tuple(name for name in ("fpr", "fnr") if math.isnan(getattr(self, name)))

    @classmethod
    def from_predictions(cls, predicted, labels) -> "Metrics":
        predicted = np.asarray(predicted, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if predicted.shape != labels.shape or predicted.size == 0:
            raise ValueError("need equally sized, non-empty prediction and label arrays")
        return cls(
            tp=int(np.sum((predicted == 1) & (labels == 1))),
            fp=int(np.sum((predicted == 1) & (labels == 0))),
            tn=int(np.sum((predicted == 0) & (labels == 0))),
            fn=int(np.sum((predicted == 0) & (labels == 1))),
        )

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy, "fpr": self.fpr, "fnr": self.fnr,
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "undefined": list(self.undefined),
        }


def evaluate(model: AnnModel, test: PairedDataset) -> Metrics:
    if len(test) == 0:
        raise ValueError("empty test set")
    return Metrics.from_predictions(np.atleast_1d(classify(model, test.X)), test.T)
