from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class PairedDataset:
    """Twin-correlation features ``X`` (N x M) with labels ``T`` (1 = MZ, 0 = DZ)."""

    X: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        T = np.asarray(self.T)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("need a non-empty N x M feature matrix")
        if T.shape != (X.shape[0],):
            raise ValueError(f"{X.shape[0]} feature rows but labels of shape {T.shape}")
        if not np.all(np.isin(T, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        if not np.all(np.isfinite(X)) or np.any(np.abs(X) > 1.0):
            raise ValueError("features must be finite correlations in [-1, 1]")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "T", T.astype(np.int64))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "PairedDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return PairedDataset(self.X[rows], self.T[rows])

    def features(self, columns) -> "PairedDataset":
        columns = np.asarray(list(columns), dtype=np.int64)
        return PairedDataset(self.X[:, columns], self.T)
