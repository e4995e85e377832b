"""Twin correlations computed from cosine-series coefficients.

Correlation is taken in coefficient space over indices ``1..k``; the constant
term is left out since it only carries the (removed) temporal mean. Voxel
correlations are pooled into region values through the Fisher z-transform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import CsrCoefficients

RHO_MAX = 1.0 - 1e-7


class ZeroNormError(ValueError):
    """A coefficient vector is identically zero, so its correlation is undefined."""

    def __init__(self, message: str, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


@dataclass(frozen=True, eq=False)
class Parcellation:
    """Region label (1-based) for each of ``n`` voxels."""

    labels: np.ndarray
    n_regions: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("parcellation needs a non-empty 1-D label array")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ValueError("region labels must be integers")
            labels = labels.astype(np.int64)
        if labels.min() < 1 or labels.max() > self.n_regions:
            raise ValueError(f"labels must lie in 1..{self.n_regions}")
        sizes = np.bincount(labels, minlength=self.n_regions + 1)[1:]
        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            raise ValueError(f"regions without voxels: {(empty + 1).tolist()}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_labels(cls, labels) -> "Parcellation":
        labels = np.asarray(labels, dtype=np.int64)
        return cls(labels, int(labels.max()))

    @classmethod
    def singletons(cls, n: int) -> "Parcellation":
        return cls(np.arange(1, n + 1), n)

    @property
    def n_voxels(self) -> int:
        return self.labels.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_regions + 1)[1:]


def csr_correlation(a, b) -> float:
    """Cosine of the angle between two coefficient vectors, clipped to [-1, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"coefficient vectors must be 1-D and equal length, got {a.shape} and {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("correlation undefined for a zero coefficient vector (signal equals its mean)")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def columnwise_correlation(A, B) -> np.ndarray:
    """:func:`csr_correlation` for each column pair of two ``k x n`` matrices."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    na = np.sqrt(np.einsum("ij,ij->j", A, A))
    nb = np.sqrt(np.einsum("ij,ij->j", B, B))
    bad = np.flatnonzero((na == 0.0) | (nb == 0.0))
    if bad.size:
        raise ZeroNormError(f"{bad.size} voxel(s) with zero coefficient vectors, first at column {bad[0]}", bad)
    dots = np.einsum("ij,ij->j", A, B)
    return np.clip(dots / (na * nb), -1.0, 1.0)


def fisher_z(rho):
    """Fisher z-transform after clamping ``|rho|`` to ``1 - 1e-7``."""
    r = np.asarray(rho, dtype=float)
    if np.any(np.isnan(r)):
        raise ValueError("fisher_z got NaN")
    if np.any(np.abs(r) > 1.0):
        raise ValueError("correlations must lie in [-1, 1]")
    z = np.arctanh(np.clip(r, -RHO_MAX, RHO_MAX))
    return float(z) if z.ndim == 0 else z


def fisher_inv(z):
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("fisher_inv needs finite input")
    rho = np.tanh(z)
    return float(rho) if rho.ndim == 0 else rho


def region_average(voxel_correlations, parc: Parcellation) -> np.ndarray:
    """Average correlations within each region on the z scale, then map back."""
    r = np.asarray(voxel_correlations, dtype=float)
    if r.shape != (parc.n_voxels,):
        raise ValueError(f"expected {parc.n_voxels} voxel correlations, got shape {r.shape}")
    z = np.atleast_1d(fisher_z(r))
    # bincount accumulates in ascending voxel order
    sums = np.bincount(parc.labels, weights=z, minlength=parc.n_regions + 1)[1:]
    return np.atleast_1d(fisher_inv(sums / parc.sizes))


def pair_to_features(subject_a: CsrCoefficients, subject_b: CsrCoefficients, parc: Parcellation) -> np.ndarray:
    """Region-level twin correlation vector for one pair of subjects."""
    if subject_a.degree != subject_b.degree:
        raise ValueError(f"degree mismatch {subject_a.degree} vs {subject_b.degree}")
    if subject_a.n != subject_b.n or subject_a.n != parc.n_voxels:
        raise ValueError(f"voxel counts differ: {subject_a.n}, {subject_b.n}, parcellation {parc.n_voxels}")
    rho = columnwise_correlation(subject_a.matrix[1:], subject_b.matrix[1:])
    return region_average(rho, parc)
