"""Stage functions shared by the CLI subcommands and the config-driven pipeline."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from . import io
from .basis import CsrCoefficients, build_design, fit_csr, normalize_time_series, uniform_grid
from .config import ExperimentConfig
from .models.dataset import PairedDataset
from .models.ensemble import EnsembleSummary, ensemble_run
from .models.split import SplitSpec
from .models.training import TrainingConfig
from .pairing import Parcellation, pair_to_features
from .selection import SelectionConfig, SelectionSummary, hill_climb_runs
from .simulate import generate_dataset, study_preset

log = logging.getLogger(__name__)

REPORT_VERSION = "1.0"


class StageFailure(RuntimeError):
    pass


# --- encode -----------------------------------------------------------------

def encode_file(in_path, out_path, degree: int = 119, placement: str = "midpoint",
                block_size: int = 4096, binary_in: bool | None = None,
                binary_out: bool | None = None) -> tuple[int, int]:
    """Fit cosine coefficients for every column of a time-series matrix file.

    Columns are processed ``block_size`` at a time. Binary inputs are memory
    mapped, so only one block of samples is resident; text inputs are parsed
    whole. Returns the shape of the coefficient matrix written.
    """
    src = io.read_matrix(in_path, binary_in, mmap=True)
    p, n = src.shape
    design = build_design(uniform_grid(p, placement), degree)
    if io.is_binary(out_path, binary_out):
        out = io.create_binary_matrix(out_path, degree + 1, n)
    else:
        out = np.empty((degree + 1, n))
    for start in range(0, n, block_size):
        block = np.asarray(src[:, start:start + block_size], dtype=float)
        Z = normalize_time_series(block, placement)
        out[:, start:start + block.shape[1]] = fit_csr(Z, design).matrix
    if isinstance(out, np.memmap):
        out.flush()
        del out
    else:
        io.write_matrix(out_path, out, binary_out)
    return degree + 1, n


# --- correlate --------------------------------------------------------------

def read_manifest(path) -> list[tuple[Path, Path, int]]:
    """CSV with header ``a,b,label``; paths relative to the manifest's directory."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"a", "b", "label"}:
            raise io.FormatError(f"{path}: manifest header must be a,b,label")
        for lineno, row in enumerate(reader, 2):
            label = row["label"].strip()
            if label not in ("0", "1"):
                raise io.FormatError(f"{path}:{lineno}: label must be 0 or 1")
            rows.append((path.parent / row["a"].strip(), path.parent / row["b"].strip(), int(label)))
    if not rows:
        raise io.FormatError(f"{path}: manifest lists no pairs")
    return rows


def correlate_pair(coef_a, coef_b, parc: Parcellation) -> np.ndarray:
    a = io.read_matrix(coef_a)
    b = io.read_matrix(coef_b)
    return pair_to_features(CsrCoefficients(a.shape[0] - 1, a), CsrCoefficients(b.shape[0] - 1, b), parc)


def correlate_manifest(pairs, parc: Parcellation) -> PairedDataset:
    X = np.array([correlate_pair(a, b, parc) for a, b, _ in pairs])
    return PairedDataset(X, np.array([label for _, _, label in pairs]))


# --- reports ----------------------------------------------------------------

def clean(obj):
    """JSON-ready copy: numpy scalars/arrays to Python, NaN and inf to None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def ensemble_report(summary: EnsembleSummary, cfg: TrainingConfig, seed: int, n_models: int,
                    source: str) -> dict:
    return {
        "format_version": REPORT_VERSION,
        "kind": "ensemble",
        "config": {
            "hidden": cfg.hidden, "lambda": cfg.lam, "max_iterations": cfg.max_iterations,
            "patience": cfg.patience, "input_scaling": cfg.input_scaling, "models": n_models,
            "seed": seed, "source": source,
        },
        **summary.to_dict(include_repeats=True),
        "flags": sorted({f for r in summary.repeats for f in r.flags}),
    }


def selection_report(summary: SelectionSummary, cfg: SelectionConfig, seed: int, source: str) -> dict:
    freq = summary.frequency
    ranking = summary.ranking
    m = freq.counts.shape[0]
    return {
        "format_version": REPORT_VERSION,
        "kind": "hillclimb",
        "config": {
            "runs": len(summary.runs), "hidden": cfg.candidate.hidden, "final_hidden": cfg.final.hidden,
            "lambda": cfg.final.lam, "candidate_repeats": cfg.candidate_repeats, "seed": seed,
            "source": source,
        },
        "n_variables": m,
        # gamma[i][k]: runs adding region k+1 at iteration i+1 (rows = iterations)
        "gamma": freq.counts.T.tolist(),
        "J": {f"region_{k + 1}": float(ranking.J[k]) for k in range(m)},
        "ranking": [k + 1 for k in ranking.order],
        "optimal_test": summary.test_summary("optimal_test"),
        "full_test": summary.test_summary("full_test"),
        "runs": [r.to_dict() for r in summary.runs],
    }


def gamma_csv(trace_report: dict) -> str:
    gamma = trace_report["gamma"]
    m = trace_report["n_variables"]
    lines = [",".join(["iteration"] + [f"region_{k}" for k in range(1, m + 1)])]
    for i, row in enumerate(gamma, 1):
        lines.append(",".join([str(i)] + [str(int(v)) for v in row]))
    return "\n".join(lines) + "\n"


class StageRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    status: str
    artifacts: dict[str, str] = {}
    error: Optional[str] = None


class RunReport(BaseModel):
    """Schema of ``report.json`` written by :func:`run_pipeline`."""

    model_config = ConfigDict(extra="forbid")
    format_version: str
    config: dict[str, Any]
    stages: list[StageRecord]
    metrics: dict[str, Any]
    flags: list[str]
    artifacts: dict[str, str]
    timings: dict[str, float]
    status: str


def training_config(cfg: ExperimentConfig) -> TrainingConfig:
    t = cfg.train
    return TrainingConfig(hidden=t.hidden, lam=t.lam, max_iterations=t.max_iterations,
                          patience=t.patience, input_scaling=t.input_scaling)


def selection_config(cfg: ExperimentConfig) -> SelectionConfig:
    base = training_config(cfg)
    h = cfg.hillclimb
    return SelectionConfig(
        candidate=base.replace(hidden=h.hidden),
        final=base.replace(hidden=h.final_hidden),
        candidate_repeats=h.candidate_repeats,
        split=SplitSpec(tuple(cfg.train.split)),
    )


def run_pipeline(cfg: ExperimentConfig) -> RunReport:
    """Run the configured stages in order; a failing stage stops the run.

    Stage outputs land in ``out_dir`` before the next stage starts and the
    report is written to ``out_dir/report.json`` either way.
    """
    seed, jobs = cfg.pipeline.seed, cfg.pipeline.jobs
    out_dir = Path(cfg.pipeline.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    features_path = out_dir / "features.csv"
    records: list[StageRecord] = []
    metrics: dict[str, Any] = {}
    flags: list[str] = []
    artifacts: dict[str, str] = {}
    timings: dict[str, float] = {}
    status = "ok"
    coef_pairs = None

    def features_for(stage_input):
        if "simulate" in cfg.pipeline.stages or "correlate" in cfg.pipeline.stages:
            return io.read_features(features_path)
        return io.read_features(stage_input)

    for stage in cfg.pipeline.stages:
        started = time.perf_counter()
        record = StageRecord(name=stage, status="ok")
        try:
            if stage == "simulate":
                s = cfg.simulate
                sim = study_preset(s.study, sharing=s.sharing, seed=seed, n_mz=s.pairs_mz, n_dz=s.pairs_dz)
                io.write_features(features_path, generate_dataset(sim))
                record.artifacts["features"] = str(features_path)
            elif stage == "encode":
                coef_dir = out_dir / "coefficients"
                coef_dir.mkdir(exist_ok=True)
                coef_pairs = []
                for i, (a, b, label) in enumerate(read_manifest(cfg.correlate.manifest)):
                    outs = []
                    for side, src in (("a", a), ("b", b)):
                        dest = coef_dir / f"pair{i:05d}_{side}{src.suffix or '.txt'}"
                        encode_file(src, dest, cfg.basis.degree, cfg.basis.placement, cfg.basis.block_size)
                        outs.append(dest)
                    coef_pairs.append((outs[0], outs[1], label))
                record.artifacts["coefficients"] = str(coef_dir)
            elif stage == "correlate":
                pairs = coef_pairs if coef_pairs is not None else read_manifest(cfg.correlate.manifest)
                parc = io.read_parcellation(cfg.correlate.parcellation)
                io.write_features(features_path, correlate_manifest(pairs, parc))
                record.artifacts["features"] = str(features_path)
            elif stage == "train":
                data = features_for(cfg.train.input)
                tcfg = training_config(cfg)
                summary = ensemble_run(data, cfg.train.models, tcfg, seed=seed,
                                       spec=SplitSpec(tuple(cfg.train.split)), jobs=jobs)
                rep = ensemble_report(summary, tcfg, seed, cfg.train.models, str(features_path))
                path = out_dir / "ensemble.json"
                dump_json(path, rep)
                record.artifacts["ensemble"] = str(path)
                metrics["train"] = {k: rep[k] for k in ("n_models", "failures", "accuracy", "fpr", "fnr")}
                flags.extend(f"train: {f}" for f in rep["flags"])
                if summary.failures:
                    raise StageFailure(f"{summary.failures} of {len(summary.repeats)} models diverged")
            elif stage == "hillclimb":
                data = features_for(cfg.hillclimb.input or cfg.train.input)
                scfg = selection_config(cfg)
                summary = hill_climb_runs(data, cfg.hillclimb.runs, scfg, seed=seed, jobs=jobs)
                rep = selection_report(summary, scfg, seed, str(features_path))
                path = out_dir / "trace.json"
                dump_json(path, rep)
                gamma_path = out_dir / "gamma.csv"
                gamma_path.write_text(gamma_csv(rep))
                record.artifacts.update(trace=str(path), gamma=str(gamma_path))
                metrics["hillclimb"] = {k: rep[k] for k in ("gamma", "J", "ranking", "optimal_test", "full_test")}
        except Exception as exc:  # noqa: BLE001 - any stage error ends the run with a partial report
            log.error("stage %s failed: %s", stage, exc)
            record.status = "failed"
            record.error = f"{type(exc).__name__}: {exc}"
            status = "failed"
        timings[stage] = time.perf_counter() - started
        records.append(record)
        artifacts.update({f"{stage}.{k}": v for k, v in record.artifacts.items()})
        if status == "failed":
            break

    report = RunReport(
        format_version=REPORT_VERSION,
        config=cfg.echo(),
        stages=records,
        metrics=clean(metrics),
        flags=flags,
        artifacts=artifacts,
        timings=timings,
        status=status,
    )
    dump_json(out_dir / "report.json", report.model_dump(mode="json"))
    return report
