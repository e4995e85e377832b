from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import PairedDataset


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15)

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ValueError("need three positive ratios (train, validation, test)")
        if not math.isclose(sum(self.ratios), 1.0, abs_tol=1e-9):
            raise ValueError(f"ratios must sum to 1, got {sum(self.ratios)}")


def split_sizes(n: int, ratios) -> tuple[int, int, int]:
    """Largest-remainder rounding of ``n * ratios``.

    Leftover units go to the largest fractional parts, earlier subsets first on
    ties. A subset left empty then takes one record from the largest subset,
    so every ``n >= 3`` yields three non-empty parts (``n = 3`` gives 1/1/1).
    """
    quotas = [n * r for r in ratios]
    sizes = [math.floor(q) for q in quotas]
    remainders = [q - s for q, s in zip(quotas, sizes)]
    order = sorted(range(len(ratios)), key=lambda i: (-remainders[i], i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    for i in range(len(sizes)):
        if sizes[i] == 0:
            donor = max(range(len(sizes)), key=lambda j: (sizes[j], -j))
            if sizes[donor] > 1:
                sizes[donor] -= 1
                sizes[i] += 1
    return tuple(sizes)


def split_indices(n: int, spec: SplitSpec, rng: np.random.Generator):
    if n < 3:
        raise ValueError(f"need at least 3 records to split, got {n}")
    sizes = split_sizes(n, spec.ratios)
    if min(sizes) == 0:
        raise ValueError(f"split of {n} records by {spec.ratios} leaves an empty subset: {sizes}")
    perm = rng.permutation(n)
    a, b = sizes[0], sizes[0] + sizes[1]
    return perm[:a], perm[a:b], perm[b:]


def split(data: PairedDataset, spec: SplitSpec, rng: np.random.Generator):
    """Random train/validation/test holdout without stratification."""
    idx = split_indices(len(data), spec, rng)
    return tuple(data.subset(i) for i in idx)
