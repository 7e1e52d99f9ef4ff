"""Deterministic SVG plots: estimate vs truth traces and tolerance curves.

Output is plain text with fixed number formatting so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .estimator import read_estimates_csv

WIDTH, HEIGHT = 720, 320
MARGIN = 48
COLORS = ("#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e")


def _bounds(values: list[np.ndarray]):
    finite = np.concatenate([v[np.isfinite(v)] for v in values]) if values else np.array([])
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def _polyline(xs, ys, xr, yr, color: str, label: str) -> str:
    x0, x1 = xr
    y0, y1 = yr
    pts = []
    for x, y in zip(xs, ys):
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        px = MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)
        py = HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)
        pts.append(f"{px:.2f},{py:.2f}")
    return (f'<polyline fill="none" stroke="{color}" stroke-width="1" '
            f'data-label="{escape(label)}" points="{" ".join(pts)}"/>')


def _frame(title: str, xlabel: str, ylabel: str, xr, yr) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#888888"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="11">'
        f'{escape(xlabel)} [{xr[0]:g}, {xr[1]:g}]</text>',
        f'<text x="12" y="{HEIGHT / 2:.0f}" font-size="11" transform="rotate(-90 12 {HEIGHT / 2:.0f})" '
        f'text-anchor="middle">{escape(ylabel)} [{yr[0]:g}, {yr[1]:g}]</text>',
    ]


def _legend(labels: list[str]) -> list[str]:
    out = []
    for j, label in enumerate(labels):
        y = MARGIN + 14 + 14 * j
        color = COLORS[j % len(COLORS)]
        out.append(f'<text x="{WIDTH - MARGIN - 6}" y="{y}" text-anchor="end" font-size="11" '
                   f'fill="{color}">{escape(label)}</text>')
    return out


def estimates_svg(minutes, truth, estimate, title: str = "occupancy") -> str:
    minutes = np.asarray(minutes, dtype=float)
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    xr = (float(minutes.min()), float(minutes.max()) if minutes.max() > minutes.min() else float(minutes.min()) + 1)
    yr = _bounds([truth, estimate])
    yr = (min(0.0, yr[0]), yr[1])
    parts = _frame(title, "minute", "occupants", xr, yr)
    parts.append(_polyline(minutes, truth, xr, yr, COLORS[0], "truth"))
    parts.append(_polyline(minutes, estimate, xr, yr, COLORS[1], "estimate"))
    parts += _legend(["truth", "estimate"])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_estimates(estimates_csv, out_svg, title: str | None = None) -> str:
    """Truth and clamped estimate against minute index."""
    cols = read_estimates_csv(estimates_csv)
    if "truth_occupancy" not in cols:
        raise ValueError(f"{estimates_csv}: no truth_occupancy column to plot against")
    svg = estimates_svg(cols["minute_index"], cols["truth_occupancy"], cols["estimate_clamped"],
                        title or Path(estimates_csv).stem)
    Path(out_svg).write_text(svg, encoding="utf-8")
    return svg


def tolerance_svg(curves: dict[str, dict[int, float]], title: str = "x-tolerance accuracy") -> str:
    """One polyline per estimator: accuracy against tolerance x."""
    xs_all = [x for c in curves.values() for x in c]
    xr = (float(min(xs_all, default=0)), float(max(xs_all, default=1)) or 1.0)
    yr = (0.0, 1.0)
    parts = _frame(title, "tolerance x", "accuracy", xr, yr)
    for j, (name, curve) in enumerate(curves.items()):
        xs = sorted(curve)
        parts.append(_polyline(xs, [curve[x] for x in xs], xr, yr, COLORS[j % len(COLORS)], name))
    parts += _legend(list(curves))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_tolerance(curves: dict[str, dict[int, float]], out_svg) -> str:
    svg = tolerance_svg(curves)
    Path(out_svg).write_text(svg, encoding="utf-8")
    return svg
