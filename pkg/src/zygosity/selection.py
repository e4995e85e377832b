"""Greedy forward (hill-climbing) variable selection over region features.

Each run starts from an empty variable set and, at every iteration, adds the
candidate whose model scores best on validation data, until all variables are
in. Across runs, ``gamma[k, i]`` counts how often variable ``k`` was added at
iteration ``i`` and ``J[k] = sum_i gamma[k, i] / (i + 1)`` ranks variables.

Variables are 0-based column indices throughout; reports add 1 when they
print region numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .models.dataset import PairedDataset
from .models.ensemble import repeat_dataset, summarize
from .models.scg import DivergenceError
from .models.split import SplitSpec, split
from .models.training import Metrics, TrainingConfig, evaluate, train_ann, tune_threshold
from .parallel import ordered_map
from .seeding import child_seed, substream
from .simulate import SimulationConfig

Evaluator = Callable[[tuple[int, ...]], Metrics]


def metric_key(metrics: Metrics | None) -> tuple[float, float, float]:
    """Sort key where smaller is better: accuracy, then FPR, then FNR.

    Undefined rates and failed evaluations sort last.
    """
    if metrics is None:
        return (0.0, math.inf, math.inf)

    def rate(x):
        return math.inf if math.isnan(x) else x

    return (-metrics.accuracy, rate(metrics.fpr), rate(metrics.fnr))


@dataclass
class SelectionStep:
    variable: int
    metrics: Metrics | None
    candidates: dict[int, Metrics | None]
    failed: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "candidates": {str(k): (None if m is None else m.to_dict()) for k, m in self.candidates.items()},
            "failed": self.failed,
        }


@dataclass
class SelectionTrace:
    n_variables: int
    steps: list[SelectionStep]

    @property
    def order(self) -> list[int]:
        return [s.variable for s in self.steps]


def hill_climb(n_variables: int, evaluator: Evaluator) -> SelectionTrace:
    """Forward selection driven by ``evaluator(subset) -> Metrics``.

    Ties on (accuracy, FPR, FNR) go to the lowest variable index. An evaluator
    raising :class:`DivergenceError` scores the candidate as accuracy 0 and the
    candidate is listed in the step's ``failed``.
    """
    if n_variables < 1:
        raise ValueError("need at least one variable")
    chosen: list[int] = []
    steps = []
    remaining = list(range(n_variables))
    while remaining:
        scored: dict[int, Metrics | None] = {}
        failed = []
        for var in remaining:
            try:
                scored[var] = evaluator(tuple(chosen + [var]))
            except DivergenceError:
                scored[var] = None
                failed.append(var)
        best = min(remaining, key=lambda v: (metric_key(scored[v]), v))
        steps.append(SelectionStep(best, scored[best], scored, failed))
        chosen.append(best)
        remaining.remove(best)
    return SelectionTrace(n_variables, steps)


@dataclass(frozen=True)
class OptimalSubset:
    variables: tuple[int, ...]
    metrics: Metrics | None

    @property
    def size(self) -> int:
        return len(self.variables)


def optimal_subset(trace: SelectionTrace) -> OptimalSubset:
    """Best-scoring prefix of the trace; the shortest one on ties."""
    if not trace.steps:
        raise ValueError("empty trace")
    best = min(range(len(trace.steps)), key=lambda i: (metric_key(trace.steps[i].metrics), i))
    return OptimalSubset(tuple(trace.order[: best + 1]), trace.steps[best].metrics)


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    counts: np.ndarray  # counts[variable, iteration]
    runs: int


def accumulate(traces: Sequence[SelectionTrace]) -> FrequencyMatrix:
    if not traces:
        raise ValueError("no traces to accumulate")
    m = traces[0].n_variables
    counts = np.zeros((m, m), dtype=np.int64)
    for trace in traces:
        if trace.n_variables != m or len(trace.steps) != m:
            raise ValueError("traces cover different numbers of variables")
        for i, var in enumerate(trace.order):
            counts[var, i] += 1
    return FrequencyMatrix(counts, len(traces))


@dataclass(frozen=True, eq=False)
class ImportanceRanking:
    J: np.ndarray
    order: tuple[int, ...]  # variables, most important first


def importance(freq: FrequencyMatrix) -> ImportanceRanking:
    weights = 1.0 / np.arange(1, freq.counts.shape[1] + 1)
    J = freq.counts @ weights
    order = tuple(sorted(range(J.size), key=lambda k: (-J[k], k)))
    return ImportanceRanking(J, order)


@dataclass(frozen=True)
class SelectionConfig:
    candidate: TrainingConfig = TrainingConfig(hidden=20)
    final: TrainingConfig = TrainingConfig(hidden=200)
    candidate_repeats: int = 3
    split: SplitSpec = SplitSpec()

    def __post_init__(self):
        if self.candidate_repeats < 1:
            raise ValueError("candidate_repeats must be >= 1")


def _subset_key(subset: Sequence[int]) -> int:
    return sum(1 << v for v in subset)


class AnnSubsetEvaluator:
    """Scores a variable subset by training on one fixed split and measuring
    validation metrics.

    Confusion counts are pooled over ``repeats`` independently initialized
    models. The initialization stream is keyed by the subset, so a subset's
    score does not depend on the order candidates are visited.
    """

    def __init__(self, train: PairedDataset, validation: PairedDataset, cfg: TrainingConfig,
                 seed: int, repeats: int = 1):
        self.train = train
        self.validation = validation
        self.cfg = cfg
        self.seed = seed
        self.repeats = repeats

    def __call__(self, subset: tuple[int, ...]) -> Metrics:
        tr = self.train.features(subset)
        va = self.validation.features(subset)
        key = _subset_key(subset)
        tp = fp = tn = fn = 0
        for r in range(self.repeats):
            model = train_ann(tr, va, self.cfg, substream(self.seed, "candidate", key, r))
            choice = tune_threshold(model, va)
            m = evaluate(model.with_threshold(choice.threshold), va)
            tp, fp, tn, fn = tp + m.tp, fp + m.fp, tn + m.tn, fn + m.fn
        return Metrics(tp, fp, tn, fn)


def fit_and_test(train: PairedDataset, validation: PairedDataset, test: PairedDataset,
                 subset: Sequence[int], cfg: TrainingConfig, rng) -> Metrics | None:
    """Train on ``subset`` columns, tune the threshold on validation, report test metrics."""
    subset = list(subset)
    try:
        model = train_ann(train.features(subset), validation.features(subset), cfg, rng)
    except DivergenceError:
        return None
    choice = tune_threshold(model, validation.features(subset))
    return evaluate(model.with_threshold(choice.threshold), test.features(subset))


@dataclass
class RunResult:
    index: int
    trace: SelectionTrace
    optimal: OptimalSubset
    optimal_test: Metrics | None
    full_test: Metrics | None

    def to_dict(self) -> dict:
        def md(m):
            return None if m is None else m.to_dict()

        return {
            "index": self.index,
            "order": [v + 1 for v in self.trace.order],
            "steps": [s.to_dict() for s in self.trace.steps],
            "optimal_subset": [v + 1 for v in self.optimal.variables],
            "optimal_validation": md(self.optimal.metrics),
            "optimal_test": md(self.optimal_test),
            "full_test": md(self.full_test),
        }


def run_selection(index: int, source, cfg: SelectionConfig, seed: int) -> RunResult:
    """One hill-climbing run: fixed split, selection on validation, final test of
    the optimal subset and of all features with full-size models."""
    data = repeat_dataset(source, seed, index)
    train, validation, test = split(data, cfg.split, substream(seed, "hillclimb-split", index))
    run_seed = child_seed(seed, "hillclimb-run", index)
    evaluator = AnnSubsetEvaluator(train, validation, cfg.candidate, run_seed, cfg.candidate_repeats)
    trace = hill_climb(data.n_features, evaluator)
    best = optimal_subset(trace)
    optimal_test = fit_and_test(train, validation, test, best.variables, cfg.final,
                                substream(seed, "final-subset", index))
    full_test = fit_and_test(train, validation, test, range(data.n_features), cfg.final,
                             substream(seed, "final-full", index))
    return RunResult(index, trace, best, optimal_test, full_test)


@dataclass
class SelectionSummary:
    runs: list[RunResult]

    @property
    def frequency(self) -> FrequencyMatrix:
        return accumulate([r.trace for r in self.runs])

    @property
    def ranking(self) -> ImportanceRanking:
        return importance(self.frequency)

    def mean_test_accuracy(self, which: str) -> float:
        vals = [getattr(r, which).accuracy for r in self.runs if getattr(r, which) is not None]
        return float(np.mean(vals)) if vals else math.nan

    def test_summary(self, which: str) -> dict:
        ms = [getattr(r, which) for r in self.runs if getattr(r, which) is not None]
        return {name: summarize(getattr(m, name) for m in ms) for name in ("accuracy", "fpr", "fnr")}


def hill_climb_runs(source: PairedDataset | SimulationConfig, n_runs: int, cfg: SelectionConfig = SelectionConfig(),
                    seed: int = 0, jobs: int = 1) -> SelectionSummary:
    if n_runs < 1:
        raise ValueError("need at least one run")
    worker = partial(run_selection, source=source, cfg=cfg, seed=seed)
    return SelectionSummary(ordered_map(worker, range(n_runs), jobs))
