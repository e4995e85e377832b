"""Command line entry point: ``zygosity <subcommand> ...``.

Exit codes: 0 success, 1 a stage failed (e.g. training diverged), 2 invalid
configuration or input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io
from .config import ConfigError, load_config
from .models.ensemble import ensemble_run
from .models.split import SplitSpec
from .pipeline import (
    correlate_manifest,
    correlate_pair,
    dump_json,
    encode_file,
    ensemble_report,
    gamma_csv,
    read_manifest,
    run_pipeline,
    selection_config,
    selection_report,
    training_config,
)
from .selection import hill_climb_runs
from .simulate import generate_dataset, study_preset

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("zygosity")


def _global_flags(default) -> argparse.ArgumentParser:
    # accepted before or after the subcommand; the subcommand copy uses SUPPRESS
    # so it does not reset values given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=default, help="INI experiment config; flags override its values")
    common.add_argument("--seed", type=int, default=default, help="master seed (default 0)")
    common.add_argument("--jobs", type=int, default=default, help="worker processes (results do not depend on it)")
    common.add_argument("--out-dir", type=Path, default=default, help="directory for relative output paths")
    common.add_argument("-v", "--verbose", action="store_true", default=False if default is None else default)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zygosity", description=__doc__.splitlines()[0],
                                     parents=[_global_flags(None)])
    common = _global_flags(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic twin dataset")
    p.add_argument("--study", type=int, choices=(1, 2, 3))
    p.add_argument("--pairs-mz", type=int)
    p.add_argument("--pairs-dz", type=int)
    p.add_argument("--sharing", choices=("independent", "shared"))
    p.add_argument("--out", type=Path, required=True, help="features CSV")

    p = sub.add_parser("encode", parents=[common], help="cosine-series coefficients for time-series matrices")
    p.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True)
    p.add_argument("--out", type=Path, nargs="+", help="one output per input (default: <stem>.coef<suffix>)")
    p.add_argument("--degree", type=int)
    p.add_argument("--placement", choices=("midpoint", "endpoints"))
    p.add_argument("--block-size", type=int)

    p = sub.add_parser("correlate", parents=[common], help="region twin correlations from coefficient files")
    p.add_argument("--parcellation", type=Path, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--pair", nargs=3, metavar=("COEF_A", "COEF_B", "LABEL"), help="append one pair")
    group.add_argument("--manifest", type=Path, help="CSV a,b,label listing coefficient files")
    p.add_argument("--out", type=Path, required=True, help="features CSV")

    p = sub.add_parser("train", parents=[common], help="ensemble of classifiers on a features CSV")
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--hidden", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--models", type=int)
    p.add_argument("--report", type=Path, required=True)

    p = sub.add_parser("hillclimb", parents=[common], help="hill-climbing variable selection runs")
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--runs", type=int)
    p.add_argument("--hidden", type=int, help="candidate network width")
    p.add_argument("--final-hidden", type=int)
    p.add_argument("--out", type=Path, required=True, help="trace JSON")

    p = sub.add_parser("report", parents=[common], help="export results from a trace JSON")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--csv", action="store_true", help="print the selection-frequency matrix as CSV")
    p.add_argument("--out", type=Path, help="write to a file instead of stdout")

    sub.add_parser("run", parents=[common], help="run the pipeline described by --config")
    return parser


def _resolve(args, path: Path | None) -> Path | None:
    if path is None or path.is_absolute() or args.out_dir is None:
        return path
    args.out_dir.mkdir(parents=True, exist_ok=True)
    return args.out_dir / path


def _config(args, **sections):
    overrides = {"pipeline": {"seed": args.seed, "jobs": args.jobs,
                              "out_dir": str(args.out_dir) if args.out_dir else None}}
    overrides.update(sections)
    return load_config(args.config, overrides)


def cmd_simulate(args) -> int:
    cfg = _config(args, simulate={"study": args.study, "pairs_mz": args.pairs_mz,
                                  "pairs_dz": args.pairs_dz, "sharing": args.sharing})
    s = cfg.simulate
    sim = study_preset(s.study, sharing=s.sharing, seed=cfg.pipeline.seed, n_mz=s.pairs_mz, n_dz=s.pairs_dz)
    out = _resolve(args, args.out)
    io.write_features(out, generate_dataset(sim))
    log.info("wrote %d pairs to %s", s.pairs_mz + s.pairs_dz, out)
    return EXIT_OK


def cmd_encode(args) -> int:
    cfg = _config(args, basis={"degree": args.degree, "placement": args.placement,
                               "block_size": args.block_size})
    outs = args.out or [p.with_name(f"{p.stem}.coef{p.suffix or '.txt'}") for p in args.inputs]
    if len(outs) != len(args.inputs):
        raise ConfigError("--out needs one path per --in")
    for src, dest in zip(args.inputs, outs):
        dest = _resolve(args, dest)
        rows, n = io.read_matrix_header(src)
        if cfg.basis.degree + 1 > rows:
            raise ConfigError(f"{src}: degree {cfg.basis.degree} needs at least {cfg.basis.degree + 1} "
                              f"time samples, file has {rows}")
        shape = encode_file(src, dest, cfg.basis.degree, cfg.basis.placement, cfg.basis.block_size)
        log.info("%s: %dx%d -> %s %dx%d", src, rows, n, dest, *shape)
    return EXIT_OK


def cmd_correlate(args) -> int:
    parc = io.read_parcellation(args.parcellation)
    out = _resolve(args, args.out)
    if args.manifest is not None:
        io.write_features(out, correlate_manifest(read_manifest(args.manifest), parc))
        return EXIT_OK
    a, b, label = args.pair
    if label not in ("0", "1"):
        raise ConfigError("LABEL must be 0 (DZ) or 1 (MZ)")
    io.append_feature_row(out, correlate_pair(Path(a), Path(b), parc), int(label))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args, train={"input": str(args.input) if args.input else None, "hidden": args.hidden,
                               "lambda": args.lam, "models": args.models})
    if cfg.train.input is None:
        raise ConfigError("no input features: pass --in or set [train] input")
    data = io.read_features(cfg.train.input)
    tcfg = training_config(cfg)
    summary = ensemble_run(data, cfg.train.models, tcfg, seed=cfg.pipeline.seed,
                           spec=SplitSpec(tuple(cfg.train.split)), jobs=cfg.pipeline.jobs)
    report = ensemble_report(summary, tcfg, cfg.pipeline.seed, cfg.train.models, str(cfg.train.input))
    dump_json(_resolve(args, args.report), report)
    acc = summary.accuracy
    print(f"accuracy {acc['mean']:.4f} +/- {acc['std']:.4f} over {acc['count']} models")
    if summary.failures:
        log.error("%d model(s) diverged", summary.failures)
        return EXIT_FAILED
    return EXIT_OK


def cmd_hillclimb(args) -> int:
    cfg = _config(args, hillclimb={"input": str(args.input) if args.input else None, "runs": args.runs,
                                   "hidden": args.hidden, "final_hidden": args.final_hidden})
    src = cfg.hillclimb.input or cfg.train.input
    if src is None:
        raise ConfigError("no input features: pass --in or set [hillclimb] input")
    data = io.read_features(src)
    scfg = selection_config(cfg)
    summary = hill_climb_runs(data, cfg.hillclimb.runs, scfg, seed=cfg.pipeline.seed, jobs=cfg.pipeline.jobs)
    report = selection_report(summary, scfg, cfg.pipeline.seed, str(src))
    dump_json(_resolve(args, args.out), report)
    print("ranking: " + " ".join(f"region_{k}" for k in report["ranking"]))
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.trace) as fh:
        trace = json.load(fh)
    if trace.get("kind") != "hillclimb":
        raise ConfigError(f"{args.trace} is not a hill-climbing trace")
    text = gamma_csv(trace) if args.csv else json.dumps(
        {k: trace[k] for k in ("J", "ranking", "optimal_test", "full_test")}, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        _resolve(args, args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args) -> int:
    if args.config is None:
        raise ConfigError("run needs --config")
    cfg = _config(args)
    report = run_pipeline(cfg)
    for stage in report.stages:
        print(f"{stage.name}: {stage.status}" + (f" ({stage.error})" if stage.error else ""))
    return EXIT_OK if report.status == "ok" else EXIT_FAILED


COMMANDS = {
    "simulate": cmd_simulate, "encode": cmd_encode, "correlate": cmd_correlate, "train": cmd_train,
    "hillclimb": cmd_hillclimb, "report": cmd_report, "run": cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        # FormatError and ZeroNormError are ValueErrors too
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
