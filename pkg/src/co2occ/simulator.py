"""Synthetic office days from a single-zone, well-mixed CO2 mass balance.

One step (one minute)::

    c' = c + dt * (gen_rate * o / volume + v * vent_rate * (outdoor - c) / volume)

The sensor reads the true concentration plus Gaussian noise and occasional
one-sided spikes, quantised to the sensor resolution.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .timeseries import DayRecord

MINUTES_PER_DAY = 1440


@dataclass(frozen=True)
class SimConfig:
    volume_m3: float = 9.3 * 20.0 * 3.0
    # one person raises the sealed default zone by ~0.55 ppm/min
    gen_rate: float = 0.55 * 558.0
    vent_rate_m3_min: float = 9.3
    outdoor_ppm: float = 400.0
    initial_ppm: float = 450.0
    vent_on_minute: int = 450
    vent_off_minute: int = 1320
    minutes: int = MINUTES_PER_DAY

    # measurement
    noise_std: float = 3.0
    spike_prob: float = 0.01
    spike_min_ppm: float = 50.0
    spike_max_ppm: float = 300.0
    spike_max_len: int = 3
    resolution_ppm: float = 1.0

    # occupancy schedule (minutes after midnight)
    max_occupancy: int = 30
    attendance_prob: float = 0.85
    arrival_mean: float = 540.0
    arrival_std: float = 60.0
    departure_mean: float = 1080.0
    departure_std: float = 100.0
    latest_departure: int = 1380
    lunch_prob: float = 0.6
    lunch_start_mean: float = 750.0
    lunch_start_std: float = 30.0
    lunch_mean_len: float = 45.0
    seed: int = 0

    def __post_init__(self):
        positive = ("volume_m3", "gen_rate", "vent_rate_m3_min", "outdoor_ppm", "initial_ppm")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("spike_prob", "attendance_prob", "lunch_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be a probability")
        if self.noise_std < 0 or self.resolution_ppm < 0:
            raise ValueError("noise_std and resolution_ppm must be >= 0")
        if not 0 < self.spike_min_ppm <= self.spike_max_ppm or self.spike_max_len < 1:
            raise ValueError("invalid spike parameters")
        if self.max_occupancy < 0 or self.minutes < 2:
            raise ValueError("invalid occupancy bound or day length")
        if not 0 <= self.vent_on_minute <= self.vent_off_minute <= self.minutes:
            raise ValueError("venting minutes must satisfy 0 <= on <= off <= minutes")
        if self.latest_departure > self.minutes:
            raise ValueError("latest_departure beyond end of day")

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> SimConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown simulator settings: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> SimConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class SimDay:
    day: DayRecord
    true_co2: np.ndarray


def step_zone(c: float, o: float, v: float, cfg: SimConfig, dt: float = 1.0) -> float:
    """Advance the zone concentration by one sample."""
    source = cfg.gen_rate * o / cfg.volume_m3
    sink = v * cfg.vent_rate_m3_min * (cfg.outdoor_ppm - c) / cfg.volume_m3
    return c + dt * (source + sink)


def steady_state(o: float, cfg: SimConfig) -> float:
    """Equilibrium concentration for constant occupancy with venting on."""
    return cfg.outdoor_ppm + cfg.gen_rate * o / cfg.vent_rate_m3_min


def venting_schedule(cfg: SimConfig) -> np.ndarray:
    t = np.arange(cfg.minutes)
    return ((t >= cfg.vent_on_minute) & (t < cfg.vent_off_minute)).astype(np.int64)


def occupancy_schedule(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Arrivals, an optional lunch break and departures for each potential occupant."""
    m = cfg.minutes
    occ = np.zeros(m, dtype=np.int64)
    for _ in range(cfg.max_occupancy):
        present = rng.random() < cfg.attendance_prob
        arrive = rng.normal(cfg.arrival_mean, cfg.arrival_std)
        leave = rng.normal(cfg.departure_mean, cfg.departure_std)
        has_lunch = rng.random() < cfg.lunch_prob
        lunch_start = rng.normal(cfg.lunch_start_mean, cfg.lunch_start_std)
        lunch_len = rng.exponential(cfg.lunch_mean_len)
        if not present:
            continue
        a = int(np.clip(round(arrive), 0, cfg.latest_departure - 30))
        d = int(np.clip(round(leave), a + 30, cfg.latest_departure))
        occ[a:d] += 1
        if has_lunch:
            ls = int(np.clip(round(lunch_start), a, d))
            le = int(np.clip(round(lunch_start + lunch_len), ls, d))
            occ[ls:le] -= 1
    return occ


def simulate_co2(occupancy, venting, cfg: SimConfig) -> np.ndarray:
    """Noise-free concentration; sample k already reflects occupancy k."""
    c = np.empty(len(occupancy))
    prev = cfg.initial_ppm
    for k, (o, v) in enumerate(zip(occupancy, venting)):
        prev = step_zone(prev, float(o), float(v), cfg)
        c[k] = prev
    return c


def measurement(true_co2, cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    m = len(true_co2)
    noise = rng.normal(0.0, cfg.noise_std, size=m) if cfg.noise_std > 0 else np.zeros(m)
    spikes = np.zeros(m)
    if cfg.spike_prob > 0:
        starts = rng.random(m) < cfg.spike_prob
        for k in np.flatnonzero(starts):
            length = int(rng.integers(1, cfg.spike_max_len + 1))
            mag = rng.uniform(cfg.spike_min_ppm, cfg.spike_max_ppm)
            spikes[k : k + length] += mag
    meas = np.asarray(true_co2) + noise + spikes
    if cfg.resolution_ppm > 0:
        meas = np.round(meas / cfg.resolution_ppm) * cfg.resolution_ppm
    return np.maximum(meas, 0.0)


def generate_day(cfg: SimConfig, day_id: str = "") -> SimDay:
    """One synthetic day; a pure function of ``cfg`` (including its seed)."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    occ = occupancy_schedule(cfg, rng)
    vent = venting_schedule(cfg)
    true_co2 = simulate_co2(occ, vent, cfg)
    meas = measurement(true_co2, cfg, rng)
    record = DayRecord(
        co2=meas, occupancy=occ, venting=vent, day_id=day_id or f"sim-{cfg.seed}",
        sample_interval_s=60, extras={"true_co2_ppm": true_co2},
    )
    return SimDay(day=record, true_co2=true_co2)


def day_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, np.uint64)[0])


def generate_days(cfg: SimConfig, n_days: int, master_seed: int | None = None) -> list[SimDay]:
    """``n_days`` days with independent seeds derived from the master seed."""
    master = cfg.seed if master_seed is None else master_seed
    return [
        generate_day(cfg.replace(seed=day_seed(master, i)), day_id=f"day-{i + 1:03d}")
        for i in range(n_days)
    ]
