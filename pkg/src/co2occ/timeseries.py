"""Day records of CO2 / occupancy / venting samples and estimator input windows.

A day file is a UTF-8 CSV::

    # sample_interval_s=60
    # day_id=day-001
    minute_index,co2_ppm,occupancy,venting
    0,412.0,0,0
    ...

Additional float columns (e.g. ``true_co2_ppm``) may follow the four
required ones; they are carried through in :attr:`DayRecord.extras`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

REQUIRED_COLUMNS = ("minute_index", "co2_ppm", "occupancy", "venting")
DEFAULT_INTERVAL_S = 60


class DataError(ValueError):
    """Malformed or invariant-violating input data."""


class InsufficientHistoryError(ValueError):
    """A window was requested before a full horizon of samples exists."""


@dataclass(frozen=True)
class HorizonConfig:
    """Horizon length ``l`` and integration stride ``s``, both in samples."""

    l: int = 30
    s: int = 10

    def __post_init__(self):
        if not (isinstance(self.l, int) and isinstance(self.s, int)):
            raise ValueError("l and s must be integers")
        if not 1 <= self.s < self.l:
            raise ValueError(f"need 1 <= s < l, got l={self.l}, s={self.s}")

    @property
    def n_inputs(self) -> int:
        return 3 * self.l + 2

    @property
    def n_features(self) -> int:
        return 5 * self.l - self.s + 3


def _readonly(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DayRecord:
    co2: np.ndarray
    occupancy: np.ndarray
    venting: np.ndarray
    day_id: str = ""
    sample_interval_s: int = DEFAULT_INTERVAL_S
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        co2 = _readonly(np.asarray(self.co2, dtype=float))
        occ_in = np.asarray(self.occupancy)
        vent_in = np.asarray(self.venting)
        m = co2.shape[0] if co2.ndim == 1 else -1
        if m < 1 or occ_in.shape != (m,) or vent_in.shape != (m,):
            raise DataError(
                "co2, occupancy and venting must be 1-D with identical length >= 1"
            )
        if not np.all(np.isfinite(co2)) or np.any(co2 < 0):
            raise DataError("co2 values must be finite and non-negative")
        if np.any(occ_in != np.round(occ_in)) or np.any(occ_in < 0):
            raise DataError("occupancy must be non-negative integers")
        if not np.all(np.isin(vent_in, (0, 1))):
            raise DataError("venting must be 0 or 1")
        if self.sample_interval_s <= 0:
            raise DataError("sample_interval_s must be positive")
        extras = {}
        for name, col in self.extras.items():
            col = np.asarray(col, dtype=float)
            if col.shape != (m,):
                raise DataError(f"extra column {name!r} has wrong length")
            extras[name] = _readonly(col)
        object.__setattr__(self, "co2", co2)
        object.__setattr__(self, "occupancy", _readonly(occ_in.astype(np.int64)))
        object.__setattr__(self, "venting", _readonly(vent_in.astype(np.int64)))
        object.__setattr__(self, "extras", extras)

    def __len__(self):
        return self.co2.shape[0]

    def with_co2(self, co2) -> DayRecord:
        """Copy of this day with the CO2 channel replaced (e.g. smoothed)."""
        return DayRecord(
            co2=co2,
            occupancy=self.occupancy,
            venting=self.venting,
            day_id=self.day_id,
            sample_interval_s=self.sample_interval_s,
            extras=dict(self.extras),
        )


@dataclass(frozen=True)
class InputWindow:
    """Estimator input x_k: CO2 c[k-l..k], occupancy o[k-l..k-1], venting v[k-l..k]."""

    co2_window: np.ndarray
    occ_window: np.ndarray
    vent_window: np.ndarray

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [
                np.asarray(self.co2_window, dtype=float),
                np.asarray(self.occ_window, dtype=float),
                np.asarray(self.vent_window, dtype=float),
            ]
        )

    @classmethod
    def from_flat(cls, x, config: HorizonConfig) -> InputWindow:
        x = np.asarray(x, dtype=float)
        l = config.l
        if x.shape != (config.n_inputs,):
            raise ValueError(f"expected flat window of length {config.n_inputs}, got {x.shape}")
        return cls(x[: l + 1], x[l + 1 : 2 * l + 1], x[2 * l + 1 :])


def window_at(day: DayRecord, occ_source, k: int, config: HorizonConfig) -> InputWindow:
    """Slice the input window ending at sample ``k`` (0-based).

    ``occ_source`` supplies past occupancy: true counts during training,
    fed-back estimates during deployment.
    """
    l = config.l
    if k < l:
        raise InsufficientHistoryError(f"k={k} < l={l}: full horizon not available")
    if k >= len(day):
        raise IndexError(f"k={k} outside day of length {len(day)}")
    occ_source = np.asarray(occ_source, dtype=float)
    if occ_source.shape[0] < k:
        raise ValueError(f"occ_source has {occ_source.shape[0]} samples, need >= {k}")
    return InputWindow(
        co2_window=day.co2[k - l : k + 1].astype(float),
        occ_window=occ_source[k - l : k].copy(),
        vent_window=day.venting[k - l : k + 1].astype(float),
    )


def window_matrix(co2, occupancy, venting, config: HorizonConfig) -> np.ndarray:
    """All teacher-forced windows of one day stacked as rows, k = l..M-1.

    Row ``j`` equals ``window_at(day, occupancy, l + j, config).flatten()``.
    """
    l = config.l
    co2 = np.asarray(co2, dtype=float)
    occ = np.asarray(occupancy, dtype=float)
    vent = np.asarray(venting, dtype=float)
    m = co2.shape[0]
    if m <= l:
        return np.empty((0, config.n_inputs))
    c_win = sliding_window_view(co2, l + 1)
    v_win = sliding_window_view(vent, l + 1)
    o_win = sliding_window_view(occ[:-1], l)
    return np.hstack([c_win, o_win, v_win])


def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_day_csv(day: DayRecord, path, extra_columns: dict | None = None) -> None:
    """Write ``day`` in the canonical CSV layout.

    ``extra_columns`` are appended after any extras the record already carries.
    """
    cols = dict(day.extras)
    for name, values in (extra_columns or {}).items():
        values = np.asarray(values, dtype=float)
        if values.shape != (len(day),):
            raise ValueError(f"extra column {name!r} has wrong length")
        cols[name] = values
    buf = io.StringIO()
    buf.write(f"# sample_interval_s={day.sample_interval_s}\n")
    buf.write(f"# day_id={day.day_id}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(REQUIRED_COLUMNS) + list(cols))
    extra_values = list(cols.values())
    for k in range(len(day)):
        row = [str(k), _fmt_float(day.co2[k]), str(int(day.occupancy[k])), str(int(day.venting[k]))]
        row.extend(_fmt_float(col[k]) for col in extra_values)
        writer.writerow(row)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _parse_meta(line: str, meta: dict) -> None:
    body = line.lstrip("#").strip()
    if "=" in body:
        key, _, value = body.partition("=")
        meta[key.strip()] = value.strip()


def load_day_csv(
    path,
    config: HorizonConfig | None = None,
    sample_interval_s: int | None = DEFAULT_INTERVAL_S,
) -> DayRecord:
    """Read and validate a day file.

    Errors name the 1-based data row at fault. When ``sample_interval_s`` is
    given, a file declaring a different interval is rejected. When ``config``
    is given the day must be longer than the horizon.
    """
    text = Path(path).read_text(encoding="utf-8")
    meta: dict[str, str] = {}
    body_lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            _parse_meta(line, meta)
        elif line.strip():
            body_lines.append(line)
    if not body_lines:
        raise DataError(f"{path}: no header row")
    reader = csv.reader(body_lines)
    header = [h.strip() for h in next(reader)]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
    if tuple(header[:4]) != REQUIRED_COLUMNS:
        raise DataError(f"{path}: header must start with {','.join(REQUIRED_COLUMNS)}")
    extra_names = header[4:]

    co2, occ, vent = [], [], []
    extras: list[list[float]] = [[] for _ in extra_names]
    for row_no, row in enumerate(reader, start=1):
        if len(row) != len(header):
            raise DataError(f"{path}: row {row_no}: expected {len(header)} cells, got {len(row)}")
        try:
            idx = int(row[0])
            c = float(row[1])
            o = int(row[2])
            v = int(row[3])
            ex = [float(cell) for cell in row[4:]]
        except ValueError as exc:
            raise DataError(f"{path}: row {row_no}: non-numeric cell ({exc})") from None
        if idx != row_no - 1:
            raise DataError(f"{path}: row {row_no}: minute_index {idx}, expected {row_no - 1}")
        if not math.isfinite(c) or c < 0:
            raise DataError(f"{path}: row {row_no}: co2_ppm must be finite and >= 0")
        if o < 0:
            raise DataError(f"{path}: row {row_no}: occupancy must be >= 0")
        if v not in (0, 1):
            raise DataError(f"{path}: row {row_no}: venting must be 0 or 1, got {v}")
        co2.append(c)
        occ.append(o)
        vent.append(v)
        for store, value in zip(extras, ex):
            store.append(value)
    if not co2:
        raise DataError(f"{path}: no data rows")

    try:
        interval = int(meta.get("sample_interval_s", DEFAULT_INTERVAL_S))
    except ValueError:
        raise DataError(f"{path}: sample_interval_s metadata is not an integer") from None
    if sample_interval_s is not None and interval != sample_interval_s:
        raise DataError(
            f"{path}: sample interval {interval}s does not match expected {sample_interval_s}s"
        )
    day = DayRecord(
        co2=co2,
        occupancy=occ,
        venting=vent,
        day_id=meta.get("day_id", Path(path).stem),
        sample_interval_s=interval,
        extras={name: np.array(vals) for name, vals in zip(extra_names, extras)},
    )
    if config is not None and len(day) <= config.l:
        raise DataError(f"{path}: {len(day)} samples, need more than l={config.l}")
    return day
