"""Fixed feature layer: CO2 level, s-step and 1-step CO2 differences, plus
pass-through occupancy and venting.

Feature order is P (CO2 horizon), I (s-step differences), D (first
differences), occ, vent. Model files and the scale design index blocks in
this order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .timeseries import HorizonConfig, InputWindow

BLOCK_NAMES = ("p", "i", "d", "occ", "vent")


def block_sizes(config: HorizonConfig) -> tuple[int, int, int, int, int]:
    l, s = config.l, config.s
    return (l + 1, l - s + 1, l, l, l + 1)


def block_slices(config: HorizonConfig) -> dict[str, slice]:
    """Column ranges of each feature block within a feature vector."""
    out = {}
    start = 0
    for name, size in zip(BLOCK_NAMES, block_sizes(config)):
        out[name] = slice(start, start + size)
        start += size
    return out


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    w1: np.ndarray
    config: HorizonConfig

    @property
    def shape(self):
        return self.w1.shape


@dataclass(frozen=True)
class FeatureVector:
    p: np.ndarray
    i: np.ndarray
    d: np.ndarray
    occ: np.ndarray
    vent: np.ndarray

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.p, self.i, self.d, self.occ, self.vent])

    @classmethod
    def from_flat(cls, y, config: HorizonConfig) -> FeatureVector:
        y = np.asarray(y, dtype=float)
        sl = block_slices(config)
        return cls(*(y[sl[name]] for name in BLOCK_NAMES))


def pid_matrix(config: HorizonConfig) -> np.ndarray:
    """The CO2 part of the feature layer, shape (3l - s + 2) x (l + 1)."""
    l, s = config.l, config.s
    eye = np.eye(l + 1)
    integ = eye[s:] - eye[: l - s + 1]
    diff = eye[1:] - eye[:l]
    return np.vstack([eye, integ, diff])


def build_feature_matrix(config: HorizonConfig) -> FeatureMatrix:
    pid = pid_matrix(config)
    l = config.l
    n_f, n = config.n_features, config.n_inputs
    w1 = np.zeros((n_f, n))
    w1[: pid.shape[0], : l + 1] = pid
    w1[pid.shape[0] :, l + 1 :] = np.eye(2 * l + 1)
    w1.setflags(write=False)
    return FeatureMatrix(w1=w1, config=config)


def apply_features(w1: FeatureMatrix, x) -> FeatureVector:
    """``y = W1 x`` for an :class:`InputWindow` or flat vector."""
    flat = x.flatten() if isinstance(x, InputWindow) else np.asarray(x, dtype=float)
    if flat.shape != (w1.shape[1],):
        raise ValueError(f"window has shape {flat.shape}, feature matrix expects ({w1.shape[1]},)")
    return FeatureVector.from_flat(w1.w1 @ flat, w1.config)


def feature_rows(w1: FeatureMatrix, x_rows) -> np.ndarray:
    """Batched feature map: rows of ``x_rows`` are flat windows."""
    x_rows = np.asarray(x_rows, dtype=float)
    if x_rows.ndim != 2 or x_rows.shape[1] != w1.shape[1]:
        raise ValueError(f"expected (N, {w1.shape[1]}) windows, got {x_rows.shape}")
    return x_rows @ w1.w1.T
