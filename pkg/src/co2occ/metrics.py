"""Estimation quality indices: RMSE, false positive / negative / detection
rates, plain accuracy and the x-tolerance accuracy curve.

A sample is "occupied" when its count is > 0. Rates over an empty set of
samples are reported as ``None`` (not applicable).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

DEFAULT_TOLERANCES = tuple(range(11))


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    fpr: float | None
    fnr: float | None
    fdr: float
    tolerance_curve: dict[int, float]
    m: int
    n0: int
    n1: int
    meta: dict = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.tolerance_curve[0]


def occupied(o) -> np.ndarray:
    return np.asarray(o, dtype=float) > 0


def accuracy(truth, estimate) -> float:
    """Share of samples estimated exactly."""
    t = np.asarray(truth, dtype=float)
    e = np.asarray(estimate, dtype=float)
    return float((t.size - np.count_nonzero(np.abs(t - e) > 0)) / t.size)


def tolerance_accuracy(truth, estimate, x: float) -> float:
    """Share of samples whose absolute error is at most ``x``."""
    err = np.abs(np.asarray(truth, dtype=float) - np.asarray(estimate, dtype=float))
    return float(np.count_nonzero(err <= x) / err.size)


def compute_metrics(
    truth,
    estimate,
    tolerances: Iterable[int] = DEFAULT_TOLERANCES,
    estimate_real=None,
) -> MetricsReport:
    """Indices for aligned truth / estimate sequences.

    ``estimate`` holds integer counts and drives the detection rates and the
    tolerance curve. RMSE uses ``estimate_real`` (e.g. clamped reals) when
    given, otherwise ``estimate``.
    """
    t = np.asarray(truth, dtype=float)
    e = np.asarray(estimate, dtype=float)
    r = e if estimate_real is None else np.asarray(estimate_real, dtype=float)
    if t.ndim != 1 or e.shape != t.shape or r.shape != t.shape:
        raise ValueError(f"length mismatch: truth {t.shape}, estimate {e.shape}, real {r.shape}")
    m = t.size
    if m < 1:
        raise ValueError("need at least one sample")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(e)) and np.all(np.isfinite(r))):
        raise ValueError("sequences contain non-finite values; drop no-estimate samples first")

    rmse = math.sqrt(float(np.sum((t - r) ** 2)) / m)
    t_occ, e_occ = occupied(t), occupied(e)
    n1 = int(np.count_nonzero(t_occ))
    n0 = m - n1
    false_pos = int(np.count_nonzero(e_occ & ~t_occ))
    true_pos = int(np.count_nonzero(e_occ & t_occ))
    fpr = false_pos / n0 if n0 else None
    fnr = 1.0 - true_pos / n1 if n1 else None
    fdr = (false_pos + n1 - true_pos) / m

    xs = sorted({int(x) for x in tolerances} | {0})
    if xs[0] < 0:
        raise ValueError("tolerances must be >= 0")
    curve = {x: tolerance_accuracy(t, e, x) for x in xs}
    return MetricsReport(
        rmse=rmse, fpr=fpr, fnr=fnr, fdr=fdr, tolerance_curve=curve, m=m, n0=n0, n1=n1,
        meta={"rmse_on": "real" if estimate_real is not None else "counts",
              "rates_on": "counts"},
    )


def evaluate_trace(trace, truth, tolerances: Iterable[int] = DEFAULT_TOLERANCES) -> MetricsReport:
    """Metrics over the estimated samples of an EstimateTrace.

    Rounded counts feed the rates and the tolerance curve; clamped reals feed RMSE.
    """
    mask = trace.valid
    report = compute_metrics(
        np.asarray(truth)[mask], trace.rounded[mask], tolerances, estimate_real=trace.clamped[mask]
    )
    report.meta.update({"rmse_on": "clamped", "rates_on": "rounded", "first_sample": trace.start})
    return report


def parse_tolerances(text: str) -> list[int]:
    """``"0..10"`` or ``"0,2,4"``."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",") if p.strip()]


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "rmse": report.rmse,
        "fpr": report.fpr,
        "fnr": report.fnr,
        "fdr": report.fdr,
        "accuracy": report.accuracy,
        "tolerance_curve": [[x, tau] for x, tau in sorted(report.tolerance_curve.items())],
        "m": report.m,
        "n0": report.n0,
        "n1": report.n1,
        "meta": report.meta,
    }


def report_from_dict(d: dict) -> MetricsReport:
    return MetricsReport(
        rmse=d["rmse"], fpr=d["fpr"], fnr=d["fnr"], fdr=d["fdr"],
        tolerance_curve={int(x): float(t) for x, t in d["tolerance_curve"]},
        m=d["m"], n0=d["n0"], n1=d["n1"], meta=d.get("meta", {}),
    )


def _rate(v: float | None) -> str:
    return "n/a" if v is None else f"{v:.6f}"


def emit_report(report: MetricsReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    if fmt == "text":
        lines = [
            f"samples    {report.m} (empty {report.n0}, occupied {report.n1})",
            f"RMSE       {report.rmse:.6f}",
            f"FPR        {_rate(report.fpr)}",
            f"FNR        {_rate(report.fnr)}",
            f"FDR        {report.fdr:.6f}",
            f"accuracy   {report.accuracy:.6f}",
            "",
            "tolerance  accuracy",
        ]
        lines += [f"{x:<10d} {tau:.6f}" for x, tau in sorted(report.tolerance_curve.items())]
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "x", "value"])
        w.writerow(["rmse", "", repr(report.rmse)])
        for name in ("fpr", "fnr"):
            v = getattr(report, name)
            w.writerow([name, "", "" if v is None else repr(v)])
        w.writerow(["fdr", "", repr(report.fdr)])
        for x, tau in sorted(report.tolerance_curve.items()):
            w.writerow(["tau", x, repr(tau)])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")
