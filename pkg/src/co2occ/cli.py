"""Command-line entry point: ``co2occ <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimator import (ConfigError, EstimationConfig, estimate_day, read_estimates_csv,
                        trace_from_columns, write_estimates_csv)
from .fselm import FS_ELM, STANDARD_ELM, TrainingSet, ZmaxTargets, train
from .metrics import compute_metrics, emit_report, parse_tolerances, report_from_dict
from .modelfile import ModelFileError, load_model, save_model
from .pipeline import SEED_ENV, PipelineConfig, PipelineError, dump_config, load_day_dir, run_pipeline, smooth_days
from .plotting import plot_estimates, plot_tolerance
from .simulator import SimConfig, generate_days
from .smoothing import SingularSystemError, SmoothConfig, smooth_all_prefixes, smooth_global
from .timeseries import DataError, HorizonConfig, load_day_csv, write_day_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("co2occ")


class UsageError(Exception):
    pass


def _seed(arg_seed):
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return arg_seed


def cmd_simulate(args) -> int:
    cfg = SimConfig.load(args.config) if args.config else SimConfig()
    seed = _seed(args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for sd in generate_days(cfg, args.days, master_seed=seed if seed is not None else cfg.seed):
        write_day_csv(sd.day, out / f"{sd.day.day_id}.csv")
    return EXIT_OK


def cmd_smooth(args) -> int:
    day = load_day_csv(args.day)
    cfg = SmoothConfig(args.lam)
    if args.local:
        rows = smooth_all_prefixes(day.co2, cfg, first=0)
        smoothed = np.diagonal(rows).copy()
    else:
        smoothed = smooth_global(day.co2, cfg)
    write_day_csv(day, args.out, extra_columns={"co2_smoothed_ppm": smoothed})
    return EXIT_OK


def cmd_train(args) -> int:
    config = HorizonConfig(args.l, args.s)
    days = load_day_dir(args.train_dir, config)
    if args.smooth == "global":
        days = smooth_days(days, args.lam)
    seed = _seed(args.seed)
    model = train(
        TrainingSet.from_days(days, config), config, hidden=args.hidden, gamma=args.gamma,
        targets=ZmaxTargets.parse(args.targets), mode=FS_ELM if args.mode == "fs" else STANDARD_ELM,
        master_seed=seed if seed is not None else 0, n_candidates=args.candidates,
    )
    model.metadata["train_smoothing"] = args.smooth
    model.metadata["lambda"] = args.lam
    save_model(model, args.out)
    log.info("training RMSE %.6f (candidate %d)", model.train_rmse, model.candidate)
    return EXIT_OK


def cmd_estimate(args) -> int:
    model = load_model(args.model)
    day = load_day_csv(args.day, model.config)
    cfg = EstimationConfig(smoothing=args.smoothing, lam=args.lam, feedback=args.feedback,
                           reestimation_window=args.window, horizon=model.config)
    trace = estimate_day(model, day, cfg)
    write_estimates_csv(trace, args.out, truth=day.occupancy)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    tolerances = parse_tolerances(args.tolerances)
    truth, rounded, clamped = [], [], []
    for path in args.estimates:
        cols = read_estimates_csv(path)
        if "truth_occupancy" not in cols:
            raise DataError(f"{path}: no truth_occupancy column")
        trace = trace_from_columns(cols)
        mask = trace.valid
        truth.append(cols["truth_occupancy"][mask])
        rounded.append(trace.rounded[mask])
        clamped.append(trace.clamped[mask])
    report = compute_metrics(np.concatenate(truth), np.concatenate(rounded), tolerances,
                             estimate_real=np.concatenate(clamped))
    report.meta.update({"rmse_on": "clamped", "rates_on": "rounded"})
    text = emit_report(report, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.reports:
        curves = {}
        for path in args.reports:
            report = report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
            curves[Path(path).stem] = report.tolerance_curve
        plot_tolerance(curves, args.out)
    elif args.estimates:
        plot_estimates(args.estimates, args.out)
    else:
        raise UsageError("plot needs --estimates or --reports")
    return EXIT_OK


def _pipeline_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    config = config.with_overrides(args.set or [])
    changes = {}
    if args.quick:
        changes.update(days=6, train_days=5, test_days=1)
    for name in ("days", "train_days", "test_days"):
        value = getattr(args, name)
        if value is not None:
            changes[name] = value
    if args.out_dir:
        changes["out_dir"] = args.out_dir
    seed = _seed(args.seed)
    if seed is not None:
        changes["seed"] = seed
    if changes:
        d = config.to_dict()
        d.update(changes)
        if "days" not in changes and d["train_days"] + d["test_days"] > d["days"]:
            d["days"] = d["train_days"] + d["test_days"]
        config = PipelineConfig.from_dict(d)
    return config


def cmd_pipeline(args) -> int:
    config = _pipeline_config(args)
    if args.print_config:
        sys.stdout.write(dump_config(config))
        return EXIT_OK
    result = run_pipeline(config)
    for name, report in result.reports.items():
        log.info("%-14s RMSE %.4f  FDR %.4f  tau(4) %.4f", name, report.rmse, report.fdr,
                 report.tolerance_curve.get(4, float("nan")))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="co2occ", description="CO2-based occupancy estimation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate synthetic day CSVs")
    s.add_argument("--config", help="simulator settings JSON")
    s.add_argument("--days", type=int, default=30)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("smooth", help="add a smoothed CO2 column to a day CSV")
    s.add_argument("--day", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=50.0)
    s.add_argument("--local", action="store_true",
                   help="value at each sample from smoothing only the samples up to it")
    s.set_defaults(func=cmd_smooth)

    s = sub.add_parser("train", help="train a model from a directory of day CSVs")
    s.add_argument("--train-dir", required=True)
    s.add_argument("--l", type=int, default=30)
    s.add_argument("--s", type=int, default=10)
    s.add_argument("--hidden", type=int, default=1000)
    s.add_argument("--gamma", type=float, default=1e-3)
    s.add_argument("--targets", default="1,1,1,1,0.1")
    s.add_argument("--candidates", type=int, default=100)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--mode", choices=("fs", "standard"), default="fs")
    s.add_argument("--smooth", choices=("global", "none"), default="none")
    s.add_argument("--lambda", dest="lam", type=float, default=50.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("estimate", help="estimate occupancy over one day")
    s.add_argument("--model", required=True)
    s.add_argument("--day", required=True)
    s.add_argument("--smoothing", choices=("none", "global", "local"), default="local")
    s.add_argument("--lambda", dest="lam", type=float, default=50.0)
    s.add_argument("--feedback", choices=("clamped", "rounded"), default="clamped")
    s.add_argument("--window", type=int, default=None,
                   help="approximate local mode: re-estimate only this many samples per step")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("evaluate", help="score estimate CSVs against their truth column")
    s.add_argument("--estimates", nargs="+", required=True)
    s.add_argument("--tolerances", default="0..10")
    s.add_argument("--format", choices=("json", "text", "csv"), default="text")
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("plot", help="SVG of an estimate CSV or of tolerance curves")
    s.add_argument("--estimates")
    s.add_argument("--reports", nargs="+", help="JSON metric reports (tolerance-curve plot)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("pipeline", help="simulate, train, estimate, evaluate and plot")
    s.add_argument("--config")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.add_argument("--out-dir")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--days", type=int)
    s.add_argument("--train", dest="train_days", type=int)
    s.add_argument("--test", dest="test_days", type=int)
    s.add_argument("--quick", action="store_true", help="6 days: 5 train, 1 test")
    s.add_argument("--print-config", action="store_true")
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _code_for(exc.cause) or EXIT_DATA
    except Exception as exc:
        code = _code_for(exc)
        if code is None:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return code


def _code_for(exc: BaseException) -> int | None:
    if isinstance(exc, (SingularSystemError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, ModelFileError, FileNotFoundError, OSError)):
        return EXIT_DATA
    if isinstance(exc, (ConfigError, ValueError)):
        return EXIT_USAGE
    return None


if __name__ == "__main__":
    sys.exit(main())
