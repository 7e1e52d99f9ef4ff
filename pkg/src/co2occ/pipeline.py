"""End-to-end experiment: simulate (or load) days, train the four estimator
variants on the first days, estimate and score the held-out days, and write
models, estimate CSVs, metric reports and plots.

Variants:

==================  ==============  ===================  ====================
name                model           trained on           tested with
==================  ==============  ===================  ====================
standard_elm        plain ELM       raw CO2              raw CO2, feedback
fs_elm_raw          FS-ELM          raw CO2              raw CO2, feedback
fs_elm_global       FS-ELM          smoothed days        smoothed day, feedback
fs_elm_local        (same model)    smoothed days        causal re-estimation
==================  ==============  ===================  ====================
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .estimator import EstimationConfig, estimate_day, write_estimates_csv
from .fselm import FS_ELM, STANDARD_ELM, TrainingSet, ZmaxTargets, train
from .metrics import DEFAULT_TOLERANCES, compute_metrics, emit_report, report_to_dict
from .modelfile import dumps_model
from .plotting import estimates_svg, tolerance_svg
from .simulator import SimConfig, generate_days
from .smoothing import SmoothConfig, smooth_global
from .timeseries import DayRecord, HorizonConfig, load_day_csv, write_day_csv

log = logging.getLogger(__name__)

SEED_ENV = "CO2OCC_SEED"


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class Variant:
    name: str
    mode: str
    train_smoothing: str
    test_smoothing: str


VARIANTS = (
    Variant("standard_elm", STANDARD_ELM, "none", "none"),
    Variant("fs_elm_raw", FS_ELM, "none", "none"),
    Variant("fs_elm_global", FS_ELM, "global", "global"),
    Variant("fs_elm_local", FS_ELM, "global", "local"),
)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    days: int = 30
    train_days: int = 25
    test_days: int = 5
    l: int = 30
    s: int = 10
    hidden: int = 1000
    gamma: float = 1e-3
    targets: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 0.1)
    candidates: int = 100
    lam: float = 50.0
    feedback: str = "clamped"
    reestimation_window: int | None = None
    tolerances: tuple[int, ...] = DEFAULT_TOLERANCES
    data_dir: str | None = None
    out_dir: str = "co2occ-out"
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        self.horizon  # validates l, s
        ZmaxTargets(*self.targets)
        SmoothConfig(self.lam)
        EstimationConfig(feedback=self.feedback, reestimation_window=self.reestimation_window,
                         horizon=self.horizon)
        if self.train_days < 1 or self.test_days < 1:
            raise ValueError("need at least one training and one test day")
        if self.train_days + self.test_days > self.days:
            raise ValueError("train_days + test_days exceeds days")
        if self.hidden < 1 or self.candidates < 1 or not self.gamma > 0:
            raise ValueError("hidden, candidates must be >= 1 and gamma > 0")

    @property
    def horizon(self) -> HorizonConfig:
        return HorizonConfig(self.l, self.s)

    @property
    def zmax_targets(self) -> ZmaxTargets:
        return ZmaxTargets(*self.targets)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["targets"] = list(self.targets)
        d["tolerances"] = list(self.tolerances)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> PipelineConfig:
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown pipeline settings: {sorted(unknown)}")
        if "sim" in d and isinstance(d["sim"], dict):
            d["sim"] = SimConfig.from_dict(d["sim"])
        for key in ("targets", "tolerances"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def with_overrides(self, assignments: Iterable[str]) -> PipelineConfig:
        """Apply ``key=value`` strings; ``sim.<name>`` reaches simulator settings.

        Values are parsed as JSON when possible, otherwise kept as strings.
        """
        d = self.to_dict()
        for item in assignments:
            key, sep, text = item.partition("=")
            if not sep:
                raise ValueError(f"override {item!r} is not key=value")
            try:
                value = json.loads(text)
            except json.JSONDecodeError:
                value = text
            target = d
            parts = key.strip().split(".")
            for p in parts[:-1]:
                if not isinstance(target.get(p), dict):
                    raise ValueError(f"unknown setting {key!r}")
                target = target[p]
            if parts[-1] not in target:
                raise ValueError(f"unknown setting {key!r}")
            target[parts[-1]] = value
        return PipelineConfig.from_dict(d)

    @classmethod
    def load(cls, path) -> PipelineConfig:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def dump_config(config: PipelineConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def write_artifact(path: Path, text: str) -> None:
    """Write via ``<path>.partial`` and rename once complete."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def smooth_days(days: Sequence[DayRecord], lam: float) -> list[DayRecord]:
    cfg = SmoothConfig(lam)
    return [d.with_co2(smooth_global(d.co2, cfg)) for d in days]


def load_day_dir(path, config: HorizonConfig | None = None) -> list[DayRecord]:
    files = sorted(Path(path).glob("*.csv"))
    if not files:
        raise FileNotFoundError(f"no day CSV files in {path}")
    return [load_day_csv(f, config) for f in files]


def train_variant(days: Sequence[DayRecord], config: PipelineConfig, mode: str, smoothing: str):
    if smoothing == "global":
        days = smooth_days(days, config.lam)
    data = TrainingSet.from_days(days, config.horizon)
    return train(data, config.horizon, hidden=config.hidden, gamma=config.gamma,
                 targets=config.zmax_targets, mode=mode, master_seed=config.seed,
                 n_candidates=config.candidates)


def tune_targets(
    train_days: Sequence[DayRecord],
    val_days: Sequence[DayRecord],
    config: PipelineConfig,
    grid: Sequence[Sequence[float]] = ((1.0, 1.0, 1.0, 1.0, 0.1),),
    smoothing: str = "global",
) -> list[tuple[tuple[float, ...], float]]:
    """Score z-max target tuples by held-out feedback-estimation RMSE, best first."""
    results = []
    for targets in grid:
        cfg = dataclasses.replace(config, targets=tuple(targets))
        model = train_variant(train_days, cfg, FS_ELM, smoothing)
        est_cfg = EstimationConfig(smoothing=smoothing, lam=config.lam, feedback=config.feedback)
        truth, est = [], []
        for day in val_days:
            trace = estimate_day(model, day, est_cfg)
            truth.append(day.occupancy[trace.valid])
            est.append(trace.clamped[trace.valid])
        rmse = compute_metrics(np.concatenate(truth), np.concatenate(est)).rmse
        results.append((tuple(targets), rmse))
    return sorted(results, key=lambda r: r[1])


@dataclass
class PipelineResult:
    out_dir: Path
    reports: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)


def _stage(name: str):
    def wrap(fn):
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                out = fn(*args, **kwargs)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(name, exc) from exc
            log.info("%s done in %.1fs", name, time.perf_counter() - t0)
            return out
        return run
    return wrap


@_stage("data")
def _data(config: PipelineConfig, out: Path) -> list[DayRecord]:
    if config.data_dir:
        days = load_day_dir(config.data_dir, config.horizon)
        if len(days) < config.train_days + config.test_days:
            raise ValueError(f"{config.data_dir} holds {len(days)} days, "
                             f"need {config.train_days + config.test_days}")
        return days
    days = [sd.day for sd in generate_days(config.sim, config.days, master_seed=config.seed)]
    (out / "data").mkdir(parents=True, exist_ok=True)
    for day in days:
        write_day_csv(day, out / "data" / f"{day.day_id}.csv")
    return days


@_stage("train")
def _train(config: PipelineConfig, train_days, out: Path) -> dict:
    models = {}
    for key, mode, smoothing in (("standard_elm", STANDARD_ELM, "none"),
                                 ("fs_elm_raw", FS_ELM, "none"),
                                 ("fs_elm_smoothed", FS_ELM, "global")):
        t0 = time.perf_counter()
        model = train_variant(train_days, config, mode, smoothing)
        log.info("trained %s (train RMSE %.4f) in %.1fs", key, model.train_rmse, time.perf_counter() - t0)
        write_artifact(out / "models" / f"{key}.json", dumps_model(model))
        models[key] = model
    return models


def _model_for(variant: Variant, models: dict):
    if variant.mode == STANDARD_ELM:
        return models["standard_elm"]
    return models["fs_elm_smoothed" if variant.train_smoothing == "global" else "fs_elm_raw"]


@_stage("estimate")
def _estimate(config: PipelineConfig, models: dict, test_days, out: Path) -> dict:
    traces = {}
    for variant in VARIANTS:
        model = _model_for(variant, models)
        est_cfg = EstimationConfig(smoothing=variant.test_smoothing, lam=config.lam,
                                   feedback=config.feedback,
                                   reestimation_window=config.reestimation_window,
                                   horizon=config.horizon)
        traces[variant.name] = []
        for day in test_days:
            trace = estimate_day(model, day, est_cfg)
            path = out / "estimates" / variant.name / f"{day.day_id}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".partial")
            write_estimates_csv(trace, tmp, truth=day.occupancy)
            os.replace(tmp, path)
            traces[variant.name].append(trace)
    return traces


@_stage("evaluate")
def _evaluate(config: PipelineConfig, traces: dict, test_days, out: Path) -> dict:
    reports = {}
    for name, day_traces in traces.items():
        truth = np.concatenate([d.occupancy[t.valid] for d, t in zip(test_days, day_traces)])
        rounded = np.concatenate([t.rounded[t.valid] for t in day_traces])
        clamped = np.concatenate([t.clamped[t.valid] for t in day_traces])
        report = compute_metrics(truth, rounded, config.tolerances, estimate_real=clamped)
        report.meta.update({"rmse_on": "clamped", "rates_on": "rounded",
                            "test_days": [d.day_id for d in test_days]})
        reports[name] = report
        write_artifact(out / "reports" / f"{name}.json", emit_report(report, "json"))
        write_artifact(out / "reports" / f"{name}.txt", emit_report(report, "text"))
    summary = {name: report_to_dict(r) for name, r in reports.items()}
    write_artifact(out / "metrics.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return reports


@_stage("plot")
def _plot(traces: dict, reports: dict, test_days, out: Path) -> None:
    for name, day_traces in traces.items():
        for day, trace in zip(test_days, day_traces):
            svg = estimates_svg(np.arange(len(day)), day.occupancy, trace.clamped,
                                f"{name} {day.day_id}")
            write_artifact(out / "plots" / name / f"{day.day_id}.svg", svg)
    curves = {name: r.tolerance_curve for name, r in reports.items()}
    write_artifact(out / "plots" / "tolerance.svg", tolerance_svg(curves))


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run every stage; raises :class:`PipelineError` naming the failed stage."""
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PipelineError("setup", exc) from exc
    write_artifact(out / "config.json", dump_config(config))

    days = _data(config, out)
    train_days = days[: config.train_days]
    test_days = days[config.train_days : config.train_days + config.test_days]
    models = _train(config, train_days, out)
    traces = _estimate(config, models, test_days, out)
    reports = _evaluate(config, traces, test_days, out)
    _plot(traces, reports, test_days, out)
    return PipelineResult(out_dir=out, reports=reports, models=models, traces=traces)
