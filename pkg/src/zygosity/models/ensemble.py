"""Repeated split / train / tune / evaluate runs with summary statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..parallel import ordered_map
from ..seeding import child_seed, substream
from ..simulate import SimulationConfig, generate_dataset
from .dataset import PairedDataset
from .scg import DivergenceError
from .split import SplitSpec, split
from .training import Metrics, TrainingConfig, evaluate, train_ann, tune_threshold


@dataclass
class RepeatResult:
    index: int
    metrics: Metrics | None = None
    threshold: float | None = None
    flags: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.metrics is None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "threshold": self.threshold,
            "flags": self.flags,
            "error": self.error,
        }


def summarize(values) -> dict:
    """Mean and population std over the defined (non-NaN) values."""
    arr = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return {"mean": math.nan, "std": math.nan, "count": 0}
    return {"mean": float(arr.mean()), "std": float(arr.std()), "count": int(arr.size)}


@dataclass
class EnsembleSummary:
    repeats: list[RepeatResult]

    @property
    def succeeded(self) -> list[RepeatResult]:
        return [r for r in self.repeats if not r.failed]

    @property
    def failures(self) -> int:
        return len(self.repeats) - len(self.succeeded)

    def stat(self, name: str) -> dict:
        return summarize(getattr(r.metrics, name) for r in self.succeeded)

    @property
    def accuracy(self) -> dict:
        return self.stat("accuracy")

    def to_dict(self, include_repeats: bool = True) -> dict:
        out = {
            "n_models": len(self.repeats),
            "failures": self.failures,
            "accuracy": self.stat("accuracy"),
            "fpr": self.stat("fpr"),
            "fnr": self.stat("fnr"),
        }
        if include_repeats:
            out["repeats"] = [r.to_dict() for r in self.repeats]
        return out


def repeat_dataset(source, seed: int, index: int) -> PairedDataset:
    """The data for one repeat: the fixed dataset, or a fresh simulation."""
    if isinstance(source, PairedDataset):
        return source
    return generate_dataset(source.replace(seed=child_seed(seed, "data", index)))


def run_repeat(index: int, source, cfg: TrainingConfig, spec: SplitSpec, seed: int) -> RepeatResult:
    data = repeat_dataset(source, seed, index)
    train, validation, test = split(data, spec, substream(seed, "split", index))
    try:
        model = train_ann(train, validation, cfg, substream(seed, "init", index))
    except DivergenceError as exc:
        return RepeatResult(index, flags=["diverged"], error=str(exc))
    choice = tune_threshold(model, validation)
    metrics = evaluate(model.with_threshold(choice.threshold), test)
    flags = [f"undefined {name}" for name in metrics.undefined]
    if choice.single_class:
        flags.append("single-class validation set; threshold fixed at 0.5")
    return RepeatResult(index, metrics, choice.threshold, flags)


def ensemble_run(source: PairedDataset | SimulationConfig, n_models: int, cfg: TrainingConfig,
                 seed: int = 0, spec: SplitSpec = SplitSpec(), jobs: int = 1) -> EnsembleSummary:
    """Train ``n_models`` independently seeded models and summarize their test metrics.

    ``source`` is either one dataset, re-split for every repeat, or a
    simulation config, in which case each repeat draws its own dataset.
    """
    if n_models < 1:
        raise ValueError("need at least one model")
    if not isinstance(source, (PairedDataset, SimulationConfig)):
        raise TypeError("source must be a PairedDataset or a SimulationConfig")
    worker = partial(run_repeat, source=source, cfg=cfg, spec=spec, seed=seed)
    return EnsembleSummary(ordered_map(worker, range(n_models), jobs))
