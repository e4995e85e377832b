"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in a summary
section at the end of the pytest run.
"""
import json
import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from oracles import (
    atanh_by_logs,
    brute_force_greedy,
    finite_difference,
    quadrature_correlation,
    random_table,
    zoom_grid_minimum,
)
from zygosity.basis import TimeSeriesMatrix, build_design, fit_csr, normalize_time_series, uniform_grid
from zygosity.cli import main
from zygosity.models.ann import ann_gradient, ann_loss, init_model
from zygosity.models.dataset import PairedDataset
from zygosity.models.ensemble import ensemble_run
from zygosity.models.logreg import train_logreg
from zygosity.models.training import TrainingConfig
from zygosity.pairing import csr_correlation, fisher_inv, fisher_z
from zygosity.pipeline import clean, selection_report
from zygosity.selection import FrequencyMatrix, SelectionConfig, SelectionStep, SelectionTrace, accumulate, \
    hill_climb, hill_climb_runs, importance
from zygosity.simulate import study_preset

SEED = 0


@pytest.fixture(scope="module")
def study3_selection():
    started = time.perf_counter()
    summary = hill_climb_runs(study_preset(3), 100, SelectionConfig(), seed=SEED)
    return summary, time.perf_counter() - started


def test_criterion_01_study1_chance(criterion):
    started = time.perf_counter()
    summary = ensemble_run(study_preset(1), 200, TrainingConfig(), seed=SEED)
    acc = summary.accuracy
    elapsed = time.perf_counter() - started
    ok = 0.44 <= acc["mean"] <= 0.56 and summary.failures == 0 and elapsed < 600
    assert criterion(1, "Study 1 chance level", ok,
                     f"mean accuracy {acc['mean']:.4f} +/- {acc['std']:.4f} over {acc['count']} models "
                     f"(target [0.44, 0.56]), {elapsed:.0f}s")


def test_criterion_02_study2_separation(criterion):
    started = time.perf_counter()
    summary = ensemble_run(study_preset(2), 200, TrainingConfig(), seed=SEED)
    acc = summary.accuracy
    elapsed = time.perf_counter() - started
    ok = acc["mean"] >= 0.70 and summary.failures == 0 and elapsed < 900
    assert criterion(2, "Study 2 separation", ok,
                     f"mean accuracy {acc['mean']:.4f} +/- {acc['std']:.4f} over {acc['count']} models "
                     f"(target >= 0.70, sharing={study_preset(2).sharing}), {elapsed:.0f}s")


def test_criterion_03_study3_hill_climbing_boost(criterion, study3_selection):
    summary, elapsed = study3_selection
    optimal = summary.mean_test_accuracy("optimal_test")
    full = summary.mean_test_accuracy("full_test")
    boost = optimal - full
    ok = boost >= 0.02 and optimal > 0.70 and full > 0.70 and elapsed < 2700
    assert criterion(3, "Study 3 hill-climbing boost", ok,
                     f"optimal-subset {optimal:.4f} vs all-5 {full:.4f}, boost {100 * boost:+.2f} pp "
                     f"(target >= +2 pp, both > 0.70), {elapsed:.0f}s")


def test_criterion_04_study3_ranking(criterion, study3_selection):
    summary, _ = study3_selection
    ranking = summary.ranking
    h = study_preset(3).h
    rho = spearmanr(ranking.J, h).statistic
    ok = ranking.order[0] == 0 and ranking.order[-1] == 4 and rho >= 0.8
    assert criterion(4, "Study 3 ranking", ok,
                     f"order {[k + 1 for k in ranking.order]}, J {np.round(ranking.J, 2).tolist()}, "
                     f"Spearman {rho:.3f} (target region 1 first, region 5 last, >= 0.8)")


def test_criterion_05_basis_suite(criterion):
    grid = uniform_grid(1200)
    D = build_design(grid, 119)
    gram = D.matrix.T @ D.matrix / 1200
    off = np.abs(gram - np.diag(np.diag(gram))).max()

    t = grid.points
    member = TimeSeriesMatrix(grid, np.sqrt(2) * np.cos(3 * np.pi * t))
    expected = np.zeros(120)
    expected[3] = 1.0
    recovery = np.abs(fit_csr(member, D).matrix[:, 0] - expected).max()

    Z = normalize_time_series(np.random.default_rng(5).normal(size=(1200, 8)))
    C = fit_csr(Z, D)
    resid = Z.values - D.matrix @ C.matrix
    ortho = np.abs(D.matrix.T @ resid).max() / np.linalg.norm(Z.values)

    rows = C.matrix.shape[0]
    ok = off < 5e-3 and recovery <= 1e-8 and ortho <= 1e-8 and rows == 120
    assert criterion(5, "basis property suite", ok,
                     f"max off-diagonal {off:.1e}, member recovery {recovery:.1e}, "
                     f"residual orthogonality {ortho:.1e} x ||Z||, rows {rows}/1200")


def test_criterion_06_correlation_oracle(criterion):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        a = rng.normal(size=119)
        b = rng.uniform(-1, 1) * a + rng.normal(size=119)
        worst = max(worst, abs(csr_correlation(a, b) - quadrature_correlation(a, b, n=100_000)))
    rs = np.linspace(-0.999, 0.999, 2001)
    round_trip = np.abs(fisher_inv(fisher_z(rs)) - rs).max()
    by_logs = max(abs(fisher_z(r) - atanh_by_logs(r)) for r in rs[::50])
    ok = worst < 1e-6 and round_trip < 1e-9 and by_logs < 1e-12
    assert criterion(6, "correlation equivalence oracle", ok,
                     f"max |coef - quadrature| {worst:.1e} over 100 pairs, Fisher round trip {round_trip:.1e}")


def test_criterion_07_gradient_check(criterion):
    rng = np.random.default_rng(7)
    data = PairedDataset(rng.uniform(-1, 1, (30, 5)), rng.integers(0, 2, 30))
    worst = 0.0
    for _ in range(100):
        m = init_model(5, 10, rng)
        W1 = m.W1.copy()
        small = np.abs(W1) < 1e-3
        W1[small] = np.where(W1[small] >= 0, 1e-3, -1e-3)
        m = m.with_flat(np.concatenate([W1.ravel(), m.flat()[W1.size:]]))
        lam = rng.uniform(0, 0.1)
        g = ann_gradient(m, data, lam)
        fd = finite_difference(lambda th: ann_loss(m.with_flat(th), data, lam), m.flat(), step=1e-6)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(g), np.linalg.norm(fd)))
    assert criterion(7, "gradient check", worst < 1e-5,
                     f"max relative error {worst:.1e} at 100 points (target < 1e-5)")


def test_criterion_08_logreg_oracle(criterion):
    x = np.array([-1.0, -1.1, -0.9, -1.05, 1.0, 1.1, 0.9, 0.95, -0.2, 0.3, 0.05, -0.6])
    t = np.array([0, 0, 0, 1, 1, 1, 1, 0, 1, 0, 1, 0])
    fit = train_logreg(x[:, None], t)
    w, b = zoom_grid_minimum(x, t)
    diff = max(abs(fit.weights[0] - w), abs(fit.intercept - b))

    rng = np.random.default_rng(8)
    X = rng.uniform(-1, 1, (300, 4))
    T = (rng.uniform(size=300) < 1 / (1 + np.exp(-(X @ [2.0, -1.0, 0.5, 0.0] + 0.3)))).astype(int)
    multi = train_logreg(X, T)
    score = np.abs(np.hstack([X, np.ones((300, 1))]).T @ (T - multi.predict_proba(X))).max()
    ok = diff < 1e-4 and score < 1e-6 and not fit.separated
    assert criterion(8, "logistic-regression oracle", ok,
                     f"|IRLS - grid minimizer| {diff:.1e} (target < 1e-4), score equations {score:.1e} (< 1e-6)")


def test_criterion_09_selection_oracle(criterion):
    mismatches = 0
    for seed in range(200):
        m = 1 + seed % 6
        table = random_table(m, seed)
        trace = hill_climb(m, lambda s: table[frozenset(s)])
        mismatches += trace.order != brute_force_greedy(m, table)

    rng = np.random.default_rng(9)
    traces = [SelectionTrace(5, [SelectionStep(int(v), None, {}) for v in rng.permutation(5)]) for _ in range(37)]
    counts = accumulate(traces).counts
    sums_ok = bool(np.all(counts.sum(axis=0) == 37) and np.all(counts.sum(axis=1) == 37))

    J = importance(FrequencyMatrix(np.array([[10, 0, 0], [0, 1, 1], [0, 0, 0]]), 10)).J
    hand_ok = J.tolist() == [10.0, 1.0 / 2 + 1.0 / 3, 0.0] and \
        importance(FrequencyMatrix(np.array([[1, 1], [1, 1]]), 2)).J.tolist() == [1.5, 1.5]
    ok = mismatches == 0 and sums_ok and hand_ok
    assert criterion(9, "selection oracle", ok,
                     f"{mismatches} greedy mismatches in 200 stub tables, gamma sums ok={sums_ok}, "
                     f"J hand cases ok={hand_ok}")


def _pipeline_outputs(tmp_path, jobs):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[pipeline]\nstages = simulate, train, hillclimb\nseed = 11\n"
        f"jobs = {jobs}\nout_dir = out\n"
        "[simulate]\nstudy = 3\n"
        "[train]\nmodels = 12\n"
        "[hillclimb]\nruns = 4\n"
    )
    assert main(["run", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    report = json.loads((out / "report.json").read_text())
    report.pop("timings")
    report["config"]["pipeline"].pop("jobs")
    return (report, (out / "features.csv").read_bytes(), (out / "ensemble.json").read_bytes(),
            (out / "trace.json").read_bytes(), (out / "gamma.csv").read_bytes())


def test_criterion_10_determinism(criterion, tmp_path):
    runs = [_pipeline_outputs(tmp_path, jobs) for jobs in (1, 2, 1)]
    pipeline_ok = runs[0] == runs[1] == runs[2]

    cfg = SelectionConfig(candidate=TrainingConfig(hidden=20), candidate_repeats=1)
    reports = [json.dumps(clean(selection_report(hill_climb_runs(study_preset(3), 3, cfg, seed=2, jobs=j),
                                                 cfg, 2, "sim")), sort_keys=True) for j in (1, 3)]
    ensembles = [json.dumps(clean(ensemble_run(study_preset(2), 6, TrainingConfig(), seed=4, jobs=j).to_dict()),
                            sort_keys=True) for j in (1, 2)]
    ok = pipeline_ok and reports[0] == reports[1] and ensembles[0] == ensembles[1]
    assert criterion(10, "determinism", ok,
                     f"pipeline jobs 1/2/1 identical={pipeline_ok}, hill climbing jobs 1/3 identical="
                     f"{reports[0] == reports[1]}, ensemble jobs 1/2 identical={ensembles[0] == ensembles[1]}")
