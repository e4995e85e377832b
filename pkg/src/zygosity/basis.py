"""Cosine series representation of time series.

A signal sampled on ``[0, 1]`` is expanded in the orthonormal cosine basis
``psi_0(t) = 1``, ``psi_l(t) = sqrt(2) cos(l pi t)`` and the expansion
coefficients are estimated by least squares.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

DEFAULT_DEGREE = 119


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a time grid needs at least 2 points")
        if pts[0] < 0.0 or pts[-1] > 1.0 or np.any(np.diff(pts) <= 0):
            raise ValueError("grid must increase strictly inside [0, 1]")
        object.__setattr__(self, "points", pts)

    @property
    def p(self) -> int:
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.points, other.points)

    __hash__ = None


GRID_PLACEMENTS = ("midpoint", "endpoints")


def uniform_grid(p: int, placement: str = "midpoint") -> TimeGrid:
    """Uniformly spaced samples on ``[0, 1]``.

    ``midpoint`` puts sample ``j`` at ``(j + 1/2) / p``. On that grid the sampled
    cosine columns are exactly orthogonal, so the constant column absorbs the
    mean and nothing else. ``endpoints`` uses ``j / (p - 1)``, which leaves an
    O(1/p) coupling between the constant and the even-order columns.
    """
    if p < 2:
        raise ValueError(f"need at least 2 samples, got {p}")
    if placement == "midpoint":
        pts = (np.arange(p, dtype=float) + 0.5) / p
    elif placement == "endpoints":
        pts = np.arange(p, dtype=float) / (p - 1)
        pts[-1] = 1.0
    else:
        raise ValueError(f"unknown grid placement {placement!r}; expected one of {GRID_PLACEMENTS}")
    return TimeGrid(pts)


@dataclass(frozen=True, eq=False)
class TimeSeriesMatrix:
    """``p x n`` samples, one signal per column."""

    grid: TimeGrid
    values: np.ndarray
    mean_removed: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] != self.grid.p:
            raise ValueError(f"values of shape {vals.shape} do not match grid of {self.grid.p} points")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class BasisDesign:
    grid: TimeGrid
    degree: int
    matrix: np.ndarray
    _qr: tuple = field(default=None, repr=False, compare=False)

    @property
    def n_basis(self) -> int:
        return self.degree + 1

    def factor(self) -> tuple[np.ndarray, np.ndarray]:
        """Economic QR of the design, computed once and cached."""
        if self._qr is None:
            q, r = scipy.linalg.qr(self.matrix, mode="economic")
            object.__setattr__(self, "_qr", (q, r))
        return self._qr


@dataclass(frozen=True, eq=False)
class CsrCoefficients:
    """``(k+1) x n`` coefficients; row ``l`` multiplies ``psi_l``."""

    degree: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim == 1:
            mat = mat[:, None]
        if mat.shape[0] != self.degree + 1:
            raise ValueError(f"expected {self.degree + 1} coefficient rows, got {mat.shape[0]}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "matrix", mat)

    @property
    def n(self) -> int:
        return self.matrix.shape[1]


def cosine_basis(t, degree: int) -> np.ndarray:
    """Evaluate ``psi_0 .. psi_degree`` at the points ``t``; shape ``(len(t), degree+1)``."""
    t = np.asarray(t, dtype=float)
    l = np.arange(degree + 1, dtype=float)
    out = np.sqrt(2.0) * np.cos(np.pi * np.outer(t, l))
    out[:, 0] = 1.0
    return out


def normalize_time_series(raw, placement: str = "midpoint") -> TimeSeriesMatrix:
    """Place samples on a uniform grid over ``[0, 1]`` and subtract each column's mean."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    if raw.ndim != 2:
        raise ValueError("expected a p x n matrix")
    if raw.shape[0] < 2:
        raise ValueError(f"need at least 2 time samples, got {raw.shape[0]}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("time series contain non-finite values")
    centered = raw - raw.mean(axis=0, keepdims=True)
    return TimeSeriesMatrix(uniform_grid(raw.shape[0], placement), centered, mean_removed=True)


def build_design(grid: TimeGrid, k: int = DEFAULT_DEGREE) -> BasisDesign:
    if k < 0:
        raise ValueError("degree must be non-negative")
    if k + 1 > grid.p:
        raise ValueError(f"degree {k} needs {k + 1} samples but the grid has {grid.p}; fit is underdetermined")
    return BasisDesign(grid, k, cosine_basis(grid.points, k))


def fit_csr(Z: TimeSeriesMatrix, design: BasisDesign) -> CsrCoefficients:
    """Least-squares coefficients, solved through the QR factorization of the design.

    Each column is solved independently of the others, so splitting the columns
    into blocks gives the same numbers as one call.
    """
    if Z.grid != design.grid:
        raise ValueError("time series grid does not match the design grid")
    q, r = design.factor()
    diag = np.abs(np.diag(r))
    if diag.min() <= diag.max() * design.grid.p * np.finfo(float).eps:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    coef = scipy.linalg.solve_triangular(r, q.T @ Z.values, lower=False)
    return CsrCoefficients(design.degree, coef)


def reconstruct(C: CsrCoefficients, design: BasisDesign) -> TimeSeriesMatrix:
    if C.degree != design.degree:
        raise ValueError(f"coefficient degree {C.degree} != design degree {design.degree}")
    return TimeSeriesMatrix(design.grid, design.matrix @ C.matrix)


@dataclass(frozen=True, eq=False)
class SnrResult:
    ratios: np.ndarray
    infinite: np.ndarray
    mean: float


def snr(Z: TimeSeriesMatrix, Zhat: TimeSeriesMatrix) -> SnrResult:
    """Ratio std(fitted) / std(residual) per column, plus the mean over columns.

    A column whose residual has zero spread gets ``inf`` and is flagged in
    ``infinite``; the mean is then ``inf`` as well.
    """
    if Z.values.shape != Zhat.values.shape:
        raise ValueError("shape mismatch")
    fitted_sd = Zhat.values.std(axis=0)
    resid_sd = (Z.values - Zhat.values).std(axis=0)
    infinite = resid_sd == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(infinite, np.inf, fitted_sd / np.where(infinite, 1.0, resid_sd))
    return SnrResult(ratios, infinite, float(np.mean(ratios)))
