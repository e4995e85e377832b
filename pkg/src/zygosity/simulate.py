"""Synthetic twin data from a mixed-effects model on coefficient vectors.

For region ``k`` and pair ``i`` each twin's coefficient vector is::

    c_k + alpha + beta

``alpha`` is twin-level noise with standard deviation ``sigma_ind`` for MZ pairs
and ``h_k * sigma_ind`` for DZ pairs; ``beta`` is individual noise with standard
deviation ``sigma_ind``, drawn separately for each twin. ``sharing`` controls
whether one ``alpha`` is added to both twins (``shared``) or each twin gets
its own draw (``independent``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .models.dataset import PairedDataset
from .pairing import csr_correlation
from .seeding import substream

MZ = 1
DZ = 0
SHARING_MODES = ("independent", "shared")
DEFAULT_SHARING = "independent"

Sharing = Literal["independent", "shared"]


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    ground_truth: np.ndarray  # (M, L): one coefficient vector per region
    sigma_ind: float
    h: np.ndarray  # (M,) DZ multipliers on the twin-level std
    n_mz: int = 50
    n_dz: int = 50
    sharing: Sharing = DEFAULT_SHARING
    seed: int = 0

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.ground_truth, dtype=float))
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if h.shape != (c.shape[0],):
            raise ValueError(f"need one multiplier per region: {h.shape} vs {c.shape[0]} regions")
        if not self.sigma_ind > 0:
            raise ValueError("sigma_ind must be positive")
        if np.any(h < 1):
            raise ValueError("DZ multipliers must be >= 1")
        if self.n_mz < 1 or self.n_dz < 1:
            raise ValueError("need at least one pair of each zygosity")
        if np.any(np.linalg.norm(c, axis=1) == 0):
            raise ValueError("ground-truth coefficient vectors must be nonzero")
        if self.sharing not in SHARING_MODES:
            raise ValueError(f"sharing must be one of {SHARING_MODES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        object.__setattr__(self, "ground_truth", c)
        object.__setattr__(self, "h", h)

    @property
    def n_regions(self) -> int:
        return self.ground_truth.shape[0]

    @property
    def n_coefficients(self) -> int:
        return self.ground_truth.shape[1]

    def twin_sd(self, zygosity: int) -> np.ndarray:
        if zygosity == MZ:
            return np.full(self.n_regions, self.sigma_ind)
        return self.h * self.sigma_ind

    def replace(self, **changes) -> "SimulationConfig":
        fields = dict(
            ground_truth=self.ground_truth, sigma_ind=self.sigma_ind, h=self.h, n_mz=self.n_mz,
            n_dz=self.n_dz, sharing=self.sharing, seed=self.seed,
        )
        fields.update(changes)
        return SimulationConfig(**fields)


@dataclass(frozen=True, eq=False)
class SyntheticPair:
    zygosity: int
    twin_a: np.ndarray  # (M, L)
    twin_b: np.ndarray

    def correlations(self) -> np.ndarray:
        return np.array([csr_correlation(a, b) for a, b in zip(self.twin_a, self.twin_b)])


STUDY_H = {
    1: [1.0, 1.0, 1.0, 1.0, 1.0],
    2: [2.0, 2.0, 2.0, 2.0, 2.0],
    3: [3.0, 2.5, 2.0, 1.5, 1.0],
}


def study_preset(which: int, sharing: Sharing = DEFAULT_SHARING, seed: int = 0,
                 n_mz: int = 50, n_dz: int = 50) -> SimulationConfig:
    """Preset 1 (no twin difference), 2 (uniform difference) or 3 (graded difference)."""
    if which not in STUDY_H:
        raise ValueError(f"unknown study {which!r}; expected 1, 2 or 3")
    c = np.array([1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5])
    return SimulationConfig(
        ground_truth=np.tile(c, (5, 1)),
        sigma_ind=0.25,
        h=np.array(STUDY_H[which]),
        n_mz=n_mz,
        n_dz=n_dz,
        sharing=sharing,
        seed=seed,
    )


def generate_pair(cfg: SimulationConfig, zygosity: int, rng, individual_rng=None) -> SyntheticPair:
    """Draw one twin pair.

    Twin-level terms come from ``rng``; individual terms come from
    ``individual_rng`` (defaults to ``rng``). Draw order is fixed: twin-level
    term(s) first, then twin A's and twin B's individual terms.
    """
    if zygosity not in (MZ, DZ):
        raise ValueError("zygosity must be 1 (MZ) or 0 (DZ)")
    individual_rng = rng if individual_rng is None else individual_rng
    shape = cfg.ground_truth.shape
    sd = cfg.twin_sd(zygosity)[:, None]
    alpha_a = rng.normal(0.0, 1.0, shape) * sd
    alpha_b = alpha_a if cfg.sharing == "shared" else rng.normal(0.0, 1.0, shape) * sd
    beta_a = individual_rng.normal(0.0, cfg.sigma_ind, shape)
    beta_b = individual_rng.normal(0.0, cfg.sigma_ind, shape)
    return SyntheticPair(
        zygosity,
        cfg.ground_truth + alpha_a + beta_a,
        cfg.ground_truth + alpha_b + beta_b,
    )


def pair_zygosity(cfg: SimulationConfig, index: int) -> int:
    return MZ if index < cfg.n_mz else DZ


def iter_pairs(cfg: SimulationConfig):
    """MZ pairs first, then DZ; pair ``i`` draws from its own substream."""
    for i in range(cfg.n_mz + cfg.n_dz):
        yield generate_pair(cfg, pair_zygosity(cfg, i), substream(cfg.seed, "simulate", i))


def generate_dataset(cfg: SimulationConfig) -> PairedDataset:
    X = np.empty((cfg.n_mz + cfg.n_dz, cfg.n_regions))
    T = np.empty(cfg.n_mz + cfg.n_dz, dtype=np.int64)
    for i, pair in enumerate(iter_pairs(cfg)):
        X[i] = pair.correlations()
        T[i] = pair.zygosity
    return PairedDataset(X, T)
