"""Day-level occupancy estimation with fed-back estimates.

Three ways of feeding CO2 to a trained model:

* ``none``   raw measured CO2, past estimates fed back;
* ``global`` the whole day smoothed at once (not available in real time);
* ``local``  at every sample k the prefix c[0..k] is smoothed and the whole
  feedback recursion is re-run from the zero initial state on that prefix.
  The reported estimate at k is the last value of that pass, so errors made
  by earlier passes never propagate.

Indices are 0-based. The first estimable sample is ``l``; occupancy before
it is the zero initial state (each day starts from zero, i.e. a reset at
midnight). Earlier samples carry NaN as the no-estimate marker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fselm import FsElmModel, sigmoid
from .smoothing import SmoothConfig, smooth_all_prefixes, smooth_global, smooth_local
from .timeseries import DataError, DayRecord, HorizonConfig

SMOOTHING_MODES = ("none", "global", "local")
FEEDBACK_MODES = ("clamped", "rounded")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EstimationConfig:
    smoothing: str = "none"
    lam: float = 50.0
    # None = re-estimate the full prefix; a finite window is an approximation
    # that seeds each pass with earlier reported estimates.
    reestimation_window: int | None = None
    feedback: str = "clamped"
    horizon: HorizonConfig | None = None

    def __post_init__(self):
        if self.smoothing not in SMOOTHING_MODES:
            raise ConfigError(f"smoothing must be one of {SMOOTHING_MODES}")
        if self.feedback not in FEEDBACK_MODES:
            raise ConfigError(f"feedback must be one of {FEEDBACK_MODES}")
        SmoothConfig(self.lam)
        if self.reestimation_window is not None and self.horizon is not None:
            if self.reestimation_window < self.horizon.l + 1:
                raise ConfigError("reestimation window must be >= l + 1")


@dataclass(frozen=True, eq=False)
class EstimateTrace:
    """Per-sample estimates; entries before ``start`` are NaN."""

    raw: np.ndarray
    clamped: np.ndarray
    rounded: np.ndarray
    start: int
    clamp_max: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.raw.shape[0]

    @property
    def valid(self) -> np.ndarray:
        mask = np.zeros(len(self), dtype=bool)
        mask[self.start :] = True
        return mask


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def clamp_and_round(raw, clamp_max: float):
    """Clip to [0, clamp_max] then round half up. Works on scalars and arrays."""
    if clamp_max < 0:
        raise ValueError("clamp_max must be >= 0")
    clamped = np.minimum(np.maximum(np.asarray(raw, dtype=float), 0.0), clamp_max)
    rounded = round_half_up(clamped)
    if clamped.ndim == 0:
        return float(clamped), int(rounded)
    return clamped, rounded


def _check(model: FsElmModel, day: DayRecord, config: EstimationConfig) -> int:
    l = model.config.l
    if config.horizon is not None and config.horizon != model.config:
        raise ConfigError(f"estimation horizon {config.horizon} does not match model {model.config}")
    if len(day) <= l:
        raise ConfigError(f"day has {len(day)} samples, need more than l={l}")
    return l


def run_passes(model: FsElmModel, co2_rows, venting, ends, feedback: str = "clamped", init_occ=None):
    """Run independent feedback recursions side by side.

    Pass ``p`` reads CO2 from ``co2_rows[p]`` and estimates samples
    ``l..ends[p]``; ``ends`` must be non-decreasing so that the passes still
    running at any step form a trailing block. Returns ``(raw, fed)``, both
    (P, M) with NaN outside each pass's estimated range; ``fed`` holds the
    clamped (or rounded) values that were fed back.
    """
    l = model.config.l
    co2_rows = np.asarray(co2_rows, dtype=float)
    vent = np.asarray(venting, dtype=float)
    ends = np.asarray(ends, dtype=int)
    n_pass, m = co2_rows.shape
    if ends.shape != (n_pass,) or np.any(np.diff(ends) < 0):
        raise ValueError("ends must be a non-decreasing vector with one entry per pass")
    if n_pass and (ends[0] < l or ends[-1] >= m):
        raise ValueError("pass ends must lie in [l, M-1]")

    a = model.input_weights
    a_co = np.ascontiguousarray(a[:, : 2 * l + 1].T)  # (2l+1, L): CO2 then occupancy columns
    a_v = a[:, 2 * l + 1 :]
    beta = model.beta
    cmax = model.clamp_max

    occ = np.zeros((n_pass, m)) if init_occ is None else np.array(init_occ, dtype=float)
    raw = np.full((n_pass, m), np.nan)
    fed = np.full((n_pass, m), np.nan)
    window = np.empty((n_pass, 2 * l + 1))
    first = 0
    for i in range(l, int(ends[-1]) + 1 if n_pass else l):
        while ends[first] < i:
            first += 1
        block = slice(first, n_pass)
        window[block, : l + 1] = co2_rows[block, i - l : i + 1]
        window[block, l + 1 :] = occ[block, i - l : i]
        z = window[block] @ a_co
        z += a_v @ vent[i - l : i + 1] + model.b
        est = sigmoid(z) @ beta
        clipped = np.minimum(np.maximum(est, 0.0), cmax)
        back = clipped if feedback == "clamped" else np.floor(clipped + 0.5)
        raw[block, i] = est
        fed[block, i] = back
        occ[block, i] = back
    return raw, fed


def _trace(raw_series: np.ndarray, start: int, clamp_max: float, meta: dict) -> EstimateTrace:
    clamped, rounded = clamp_and_round(raw_series, clamp_max if math.isfinite(clamp_max) else np.inf)
    clamped[:start] = np.nan
    rounded[:start] = np.nan
    return EstimateTrace(raw=raw_series, clamped=clamped, rounded=rounded,
                         start=start, clamp_max=clamp_max, meta=meta)


def estimate_day_feedback(model: FsElmModel, day: DayRecord, config: EstimationConfig = EstimationConfig()) -> EstimateTrace:
    """Single feedback recursion over the day on raw or globally smoothed CO2."""
    l = _check(model, day, config)
    if config.smoothing == "none":
        co2 = day.co2.astype(float)
    elif config.smoothing == "global":
        co2 = smooth_global(day.co2, SmoothConfig(config.lam))
    else:
        raise ConfigError("estimate_day_feedback handles smoothing 'none' or 'global'")
    m = len(day)
    raw, _ = run_passes(model, co2[None, :], day.venting, [m - 1], config.feedback)
    return _trace(raw[0], l, model.clamp_max,
                  {"smoothing": config.smoothing, "lam": config.lam, "feedback": config.feedback})


def estimate_day_local(model: FsElmModel, day: DayRecord, config: EstimationConfig = EstimationConfig(smoothing="local")) -> EstimateTrace:
    """Causal estimation with local smoothing and per-sample re-estimation."""
    l = _check(model, day, config)
    if config.smoothing != "local":
        raise ConfigError("estimate_day_local requires smoothing='local'")
    m = len(day)
    prefixes = smooth_all_prefixes(day.co2, SmoothConfig(config.lam), first=l)
    meta = {"smoothing": "local", "lam": config.lam, "feedback": config.feedback,
            "reestimation_window": config.reestimation_window or "full"}

    if config.reestimation_window is None:
        ends = np.arange(l, m)
        raw, _ = run_passes(model, np.nan_to_num(prefixes[l:]), day.venting, ends, config.feedback)
        series = np.full(m, np.nan)
        series[l:] = raw[np.arange(m - l), ends]
        return _trace(series, l, model.clamp_max, meta)

    window = int(config.reestimation_window)
    if window < l + 1:
        raise ConfigError("reestimation window must be >= l + 1")
    series = np.full(m, np.nan)
    reported = np.zeros(m)
    for k in range(l, m):
        first = max(l, k - window + 1)
        init = np.zeros((1, m))
        init[0, :first] = reported[:first]
        row = np.nan_to_num(prefixes[k])[None, :]
        raw, fed = _run_from(model, row, day.venting, first, k, config.feedback, init)
        series[k] = raw[0, k]
        reported[k] = fed[0, k]
    return _trace(series, l, model.clamp_max, meta)


def _run_from(model, co2_rows, venting, first, end, feedback, init_occ):
    """Single recursion over samples ``first..end`` seeded with ``init_occ``."""
    l = model.config.l
    a = model.input_weights
    occ = init_occ.copy()
    raw = np.full(occ.shape, np.nan)
    fed = np.full(occ.shape, np.nan)
    vent = np.asarray(venting, dtype=float)
    for i in range(first, end + 1):
        x = np.concatenate([co2_rows[0, i - l : i + 1], occ[0, i - l : i], vent[i - l : i + 1]])
        est = float(sigmoid(a @ x + model.b) @ model.beta)
        clipped = min(max(est, 0.0), model.clamp_max)
        back = clipped if feedback == "clamped" else math.floor(clipped + 0.5)
        raw[0, i], fed[0, i], occ[0, i] = est, back, back
    return raw, fed


def estimate_pass(model: FsElmModel, day: DayRecord, k: int, config: EstimationConfig = EstimationConfig(smoothing="local")) -> np.ndarray:
    """The single re-estimation pass at sample ``k`` computed in isolation.

    Returns the raw estimates of that pass for samples ``0..k`` (NaN before l).
    """
    l = _check(model, day, config)
    if not l <= k < len(day):
        raise ValueError(f"k must lie in [{l}, {len(day) - 1}]")
    prefix = smooth_local(day.co2[: k + 1], SmoothConfig(config.lam))
    raw, _ = run_passes(model, prefix[None, :], day.venting[: k + 1], [k], config.feedback)
    return raw[0]


def estimate_day(model: FsElmModel, day: DayRecord, config: EstimationConfig) -> EstimateTrace:
    if config.smoothing == "local":
        return estimate_day_local(model, day, config)
    return estimate_day_feedback(model, day, config)


ESTIMATE_COLUMNS = ("minute_index", "estimate_raw", "estimate_clamped", "estimate_rounded")


def _cell(v: float, integer: bool = False) -> str:
    if not math.isfinite(v):
        return ""
    return str(int(v)) if integer else repr(float(v))


def write_estimates_csv(trace: EstimateTrace, path, truth=None) -> None:
    """Write a trace; samples without an estimate get empty cells."""
    cols = list(ESTIMATE_COLUMNS) + (["truth_occupancy"] if truth is not None else [])
    lines = [",".join(cols)]
    for k in range(len(trace)):
        row = [str(k), _cell(trace.raw[k]), _cell(trace.clamped[k]), _cell(trace.rounded[k], True)]
        if truth is not None:
            row.append(str(int(truth[k])))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_estimates_csv(path) -> dict[str, np.ndarray]:
    """Columns of an estimates file as float arrays (NaN for empty cells)."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise DataError(f"{path}: empty estimates file")
    header = text[0].strip().split(",")
    if tuple(header[:4]) != ESTIMATE_COLUMNS:
        raise DataError(f"{path}: header must start with {','.join(ESTIMATE_COLUMNS)}")
    out: dict[str, list[float]] = {h: [] for h in header}
    for row_no, line in enumerate(text[1:], start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise DataError(f"{path}: row {row_no}: expected {len(header)} cells")
        try:
            for h, c in zip(header, cells):
                out[h].append(float(c) if c.strip() else math.nan)
        except ValueError:
            raise DataError(f"{path}: row {row_no}: non-numeric cell") from None
    return {h: np.array(v) for h, v in out.items()}


def trace_from_columns(cols: dict[str, np.ndarray], clamp_max: float = math.inf) -> EstimateTrace:
    raw = cols["estimate_raw"]
    finite = np.flatnonzero(np.isfinite(raw))
    start = int(finite[0]) if finite.size else len(raw)
    return EstimateTrace(raw=raw, clamped=cols["estimate_clamped"], rounded=cols["estimate_rounded"],
                         start=start, clamp_max=clamp_max)
