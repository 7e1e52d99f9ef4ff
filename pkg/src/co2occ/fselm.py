"""Feature-scaled extreme learning machine (FS-ELM) and the plain ELM baseline.

Forward pass of the scaled model::

    y = W1 x                      (fixed feature layer)
    z = R (S y) + b               (S diagonal, one scalar per feature block)
    o = sigmoid(z) . beta

``R`` and ``b`` are random and never tuned. ``S`` is chosen from the
training data so that each feature block contributes at most a target
amount to ``||z - b||_inf``; ``beta`` is a ridge solve. The baseline
(``standard_elm``) skips the feature layer and the scaling: ``z = W x + b``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from .features import BLOCK_NAMES, FeatureMatrix, block_slices, build_feature_matrix, feature_rows
from .timeseries import DayRecord, HorizonConfig, InputWindow, window_matrix

FS_ELM = "fs_elm"
STANDARD_ELM = "standard_elm"
MODES = (FS_ELM, STANDARD_ELM)

# Row-major draws from PCG64; bump if the draw order ever changes.
PRNG_NAME = "numpy.PCG64/v1"

_CHUNK_ROWS = 4096


@dataclass(frozen=True)
class ScaleParams:
    alpha_p: float
    alpha_i: float
    alpha_d: float
    alpha_o: float
    alpha_v: float

    def __post_init__(self):
        if not all(a > 0 and math.isfinite(a) for a in self.as_tuple()):
            raise ValueError(f"scale parameters must be positive and finite: {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.alpha_p, self.alpha_i, self.alpha_d, self.alpha_o, self.alpha_v)

    def diagonal(self, config: HorizonConfig) -> np.ndarray:
        """Diagonal of the scale matrix S over the feature vector."""
        out = np.empty(config.n_features)
        for name, alpha in zip(BLOCK_NAMES, self.as_tuple()):
            out[block_slices(config)[name]] = alpha
        return out


@dataclass(frozen=True)
class ZmaxTargets:
    """Per-block bound on the scaled pre-activation; the five must sum below 5."""

    z_p: float = 1.0
    z_i: float = 1.0
    z_d: float = 1.0
    z_o: float = 1.0
    z_v: float = 0.1

    def __post_init__(self):
        vals = self.as_tuple()
        if not all(v > 0 and math.isfinite(v) for v in vals):
            raise ValueError(f"z-max targets must be positive: {vals}")
        if sum(vals) >= 5:
            raise ValueError(f"z-max targets must sum below 5, got {sum(vals)}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.z_p, self.z_i, self.z_d, self.z_o, self.z_v)

    @classmethod
    def parse(cls, text: str) -> ZmaxTargets:
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 5:
            raise ValueError("expected five comma-separated z-max targets")
        return cls(*parts)


@dataclass(frozen=True)
class TrainingSet:
    """Teacher-forced windows (rows) and their occupancy targets."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        t = np.asarray(self.targets, dtype=float)
        if x.ndim != 2 or t.shape != (x.shape[0],):
            raise ValueError("inputs must be (N, n) and targets (N,)")
        if x.shape[0] < 1:
            raise ValueError("training set is empty")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", t)

    def __len__(self):
        return self.inputs.shape[0]

    @classmethod
    def from_days(cls, days: Iterable[DayRecord], config: HorizonConfig) -> TrainingSet:
        xs, ts = [], []
        for day in days:
            xs.append(window_matrix(day.co2, day.occupancy, day.venting, config))
            ts.append(day.occupancy[config.l :].astype(float))
        if not xs:
            raise ValueError("no training days")
        return cls(np.vstack(xs), np.concatenate(ts))


@dataclass(frozen=True, eq=False)
class FsElmModel:
    mode: str
    config: HorizonConfig
    r: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    scale: ScaleParams | None = None
    targets: ZmaxTargets | None = None
    gamma: float = 1e-3
    seed: int = 0
    candidate: int = 0
    clamp_max: float = math.inf
    train_rmse: float = math.nan
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        cols = self.config.n_features if self.mode == FS_ELM else self.config.n_inputs
        hidden = self.b.shape[0]
        if self.r.shape != (hidden, cols) or self.beta.shape != (hidden,):
            raise ValueError(
                f"inconsistent shapes: r {self.r.shape}, b {self.b.shape}, beta {self.beta.shape}"
            )
        if self.mode == FS_ELM and self.scale is None:
            raise ValueError("fs_elm model needs scale parameters")
        if not np.all(np.isfinite(self.beta)):
            raise ValueError("output weights are not finite")
        for a in (self.r, self.b, self.beta):
            a.setflags(write=False)

    @property
    def hidden(self) -> int:
        return self.b.shape[0]

    @cached_property
    def w1(self) -> FeatureMatrix | None:
        return build_feature_matrix(self.config) if self.mode == FS_ELM else None

    @cached_property
    def input_weights(self) -> np.ndarray:
        """Composite map from flat window to pre-activation (without bias), L x n."""
        if self.mode == STANDARD_ELM:
            return self.r
        a = (self.r * self.scale.diagonal(self.config)) @ self.w1.w1
        a.setflags(write=False)
        return a

    def with_beta(self, beta) -> FsElmModel:
        return FsElmModel(
            mode=self.mode, config=self.config, r=self.r, b=self.b,
            beta=np.array(beta, dtype=float), scale=self.scale, targets=self.targets,
            gamma=self.gamma, seed=self.seed, candidate=self.candidate,
            clamp_max=self.clamp_max, train_rmse=self.train_rmse, metadata=dict(self.metadata),
        )


def sigmoid(z):
    """Logistic function; overflow-free for any finite input."""
    return expit(z)


def candidate_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Sub-seed for candidate ``index`` derived from the master seed by counter."""
    return np.random.SeedSequence([int(master_seed), int(index)])


def generate_random_layer(seed, hidden: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights ~ U(-1, 1) of shape (hidden, cols) then biases ~ U(-0.1, 0.1).

    Both are drawn row-major from a single PCG64 stream, weights first.
    """
    if hidden < 1 or cols < 1:
        raise ValueError("hidden and cols must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    r = rng.uniform(-1.0, 1.0, size=(hidden, cols))
    b = rng.uniform(-0.1, 0.1, size=hidden)
    return r, b


def block_zmax(r: np.ndarray, features: np.ndarray, config: HorizonConfig) -> np.ndarray:
    """Unscaled per-block maxima ``max_k ||R_s y_k^s||_inf`` for the five blocks."""
    features = np.asarray(features, dtype=float)
    slices = [block_slices(config)[name] for name in BLOCK_NAMES]
    # contiguous operands, and chunks small enough that each product stays in cache
    f_blocks = [np.ascontiguousarray(features[:, sl]) for sl in slices]
    r_blocks = [np.ascontiguousarray(r[:, sl].T) for sl in slices]
    out = np.zeros(len(BLOCK_NAMES))
    for start in range(0, features.shape[0], 256):
        for j, (fb, rb) in enumerate(zip(f_blocks, r_blocks)):
            zb = fb[start : start + 256] @ rb
            out[j] = max(out[j], float(zb.max()), -float(zb.min()))
    return out


def design_scale(r, training_features, targets: ZmaxTargets, config: HorizonConfig) -> ScaleParams:
    """Choose one scale per feature block so that block ``s`` peaks at its target.

    ``training_features`` is an (N, n_f) array or a sequence of FeatureVectors.
    A block that is identically zero over the training set gets scale 1.
    """
    if not isinstance(training_features, np.ndarray):
        training_features = np.array([fv.flatten() for fv in training_features])
    if training_features.ndim != 2 or training_features.shape[0] == 0:
        raise ValueError("design_scale needs a non-empty (N, n_f) training feature set")
    r = np.asarray(r, dtype=float)
    if r.shape[1] != config.n_features or training_features.shape[1] != config.n_features:
        raise ValueError("random matrix / features do not match the horizon configuration")
    zprime = block_zmax(r, training_features, config)
    alphas = []
    for name, zt, zp in zip(BLOCK_NAMES, targets.as_tuple(), zprime):
        if zp == 0.0:
            warnings.warn(f"feature block {name!r} is zero over the training set; scale set to 1")
            alphas.append(1.0)
        else:
            alphas.append(zt / zp)
    return ScaleParams(*alphas)


def hidden_outputs(model: FsElmModel, x) -> np.ndarray:
    """Hidden-layer activations for one window, evaluated layer by layer."""
    flat = x.flatten() if isinstance(x, InputWindow) else np.asarray(x, dtype=float)
    if flat.shape != (model.config.n_inputs,):
        raise ValueError(f"window has shape {flat.shape}, model expects ({model.config.n_inputs},)")
    if model.mode == STANDARD_ELM:
        z = model.r @ flat + model.b
    else:
        y = model.w1.w1 @ flat
        z = model.r @ (model.scale.diagonal(model.config) * y) + model.b
    return sigmoid(z)


def hidden_matrix(model: FsElmModel, x_rows) -> np.ndarray:
    """Hidden-layer activations for stacked windows, (N, L)."""
    x_rows = np.asarray(x_rows, dtype=float)
    return sigmoid(x_rows @ model.input_weights.T + model.b)


def preactivation_rows(model: FsElmModel, x_rows, include_bias: bool = True) -> np.ndarray:
    z = np.asarray(x_rows, dtype=float) @ model.input_weights.T
    return z + model.b if include_bias else z


def saturation_fraction(model: FsElmModel, x_rows, threshold: float = 5.0, include_bias: bool = True) -> float:
    """Fraction of pre-activations with ``|z| > threshold`` over the given windows."""
    z = preactivation_rows(model, x_rows, include_bias=include_bias)
    return float(np.mean(np.abs(z) > threshold))


def _ridge_from_gram(gram: np.ndarray, hto: np.ndarray, gamma: float) -> np.ndarray:
    a = gram + gamma * np.eye(gram.shape[0])
    return cho_solve(cho_factor(a, lower=True, check_finite=True), hto)


def solve_ridge(h_matrix, targets, gamma: float) -> np.ndarray:
    """Minimiser of ``gamma ||beta||^2 + ||H beta - O||^2`` by Cholesky of ``gamma I + H^T H``."""
    if not gamma > 0:
        raise ValueError(f"ridge parameter must be > 0, got {gamma}")
    h = np.asarray(h_matrix, dtype=float)
    o = np.asarray(targets, dtype=float)
    if h.ndim != 2 or o.shape != (h.shape[0],):
        raise ValueError("H must be (N, L) and targets (N,)")
    return _ridge_from_gram(h.T @ h, h.T @ o, gamma)


def _gram_stats(x_rows: np.ndarray, targets: np.ndarray, weights: np.ndarray, b: np.ndarray):
    hidden = b.shape[0]
    gram = np.zeros((hidden, hidden))
    hto = np.zeros(hidden)
    for start in range(0, x_rows.shape[0], _CHUNK_ROWS):
        h = x_rows[start : start + _CHUNK_ROWS] @ weights.T
        h += b
        # Below -340 the sigmoid is < 1e-147; clipping there keeps H and H^T H
        # free of subnormals, which otherwise slow the BLAS products severalfold.
        np.maximum(h, -340.0, out=h)
        expit(h, out=h)
        gram += h.T @ h
        hto += h.T @ targets[start : start + _CHUNK_ROWS]
    return gram, hto


def fit_candidate(
    data: TrainingSet,
    config: HorizonConfig,
    seed,
    hidden: int,
    gamma: float,
    targets: ZmaxTargets,
    mode: str,
    features: np.ndarray | None = None,
) -> tuple[FsElmModel, float]:
    """Fit one random draw; returns the model and its training RMSE."""
    if mode == FS_ELM:
        w1 = build_feature_matrix(config)
        if features is None:
            features = feature_rows(w1, data.inputs)
        r, b = generate_random_layer(seed, hidden, config.n_features)
        scale = design_scale(r, features, targets, config)
        weights = (r * scale.diagonal(config)) @ w1.w1
    elif mode == STANDARD_ELM:
        r, b = generate_random_layer(seed, hidden, config.n_inputs)
        scale = None
        weights = r
    else:
        raise ValueError(f"unknown mode {mode!r}")

    o = data.targets
    gram, hto = _gram_stats(data.inputs, o, weights, b)
    beta = _ridge_from_gram(gram, hto, gamma)
    # ||H beta - O||^2 expanded through the Gram matrix avoids a second pass over H.
    sse = float(o @ o - 2.0 * beta @ hto + beta @ gram @ beta)
    rmse = math.sqrt(max(sse, 0.0) / len(data))
    model = FsElmModel(
        mode=mode, config=config, r=r, b=b, beta=beta, scale=scale,
        targets=targets if mode == FS_ELM else None, gamma=gamma,
        clamp_max=float(np.max(o)), train_rmse=rmse,
    )
    return model, rmse


def train(
    data: TrainingSet,
    config: HorizonConfig = HorizonConfig(),
    hidden: int = 1000,
    gamma: float = 1e-3,
    targets: ZmaxTargets = ZmaxTargets(),
    seeds: Sequence[int] | None = None,
    mode: str = FS_ELM,
    master_seed: int = 0,
    n_candidates: int = 100,
) -> FsElmModel:
    """Fit one model per random draw and keep the lowest training RMSE.

    Candidate ``i`` uses ``candidate_seed(master_seed, i)`` unless explicit
    ``seeds`` are given. Ties go to the lower candidate index.
    """
    if data.inputs.shape[1] != config.n_inputs:
        raise ValueError(f"training windows have {data.inputs.shape[1]} columns, expected {config.n_inputs}")
    if len(data) < hidden:
        warnings.warn(f"{len(data)} training samples for {hidden} hidden neurons")
    if seeds is None:
        if n_candidates < 1:
            raise ValueError("need at least one candidate")
        seed_list = [candidate_seed(master_seed, i) for i in range(n_candidates)]
    else:
        seed_list = list(seeds)
        if not seed_list:
            raise ValueError("seeds must be non-empty")

    features = feature_rows(build_feature_matrix(config), data.inputs) if mode == FS_ELM else None
    best, best_rmse, best_idx = None, math.inf, -1
    for idx, seed in enumerate(seed_list):
        model, rmse = fit_candidate(data, config, seed, hidden, gamma, targets, mode, features)
        if rmse < best_rmse:
            best, best_rmse, best_idx = model, rmse, idx
    if best is None:
        raise ArithmeticError("no candidate produced a finite training error")

    # The Gram expansion cancels badly near zero error; report the winner's RMSE from residuals.
    sse = 0.0
    for start in range(0, len(data), _CHUNK_ROWS):
        chunk = slice(start, start + _CHUNK_ROWS)
        resid = predict_rows(best, data.inputs[chunk]) - data.targets[chunk]
        sse += float(resid @ resid)
    best_rmse = math.sqrt(sse / len(data))

    seed_value = int(master_seed) if seeds is None else int(seed_list[best_idx])
    return FsElmModel(
        mode=best.mode, config=best.config, r=best.r, b=best.b, beta=best.beta,
        scale=best.scale, targets=best.targets, gamma=gamma, seed=seed_value,
        candidate=best_idx if seeds is None else 0, clamp_max=best.clamp_max,
        train_rmse=best_rmse,
        metadata={
            "prng": PRNG_NAME,
            "n_candidates": len(seed_list),
            "n_train": len(data),
            "explicit_seed": seeds is not None,
        },
    )


def predict(model: FsElmModel, x) -> float:
    """Raw real-valued estimate for one window (no clamping)."""
    return float(hidden_outputs(model, x) @ model.beta)


def predict_rows(model: FsElmModel, x_rows) -> np.ndarray:
    return hidden_matrix(model, x_rows) @ model.beta


def regenerate_layer(model: FsElmModel) -> tuple[np.ndarray, np.ndarray]:
    """Redraw ``(r, b)`` from the model's recorded seed and candidate index."""
    cols = model.config.n_features if model.mode == FS_ELM else model.config.n_inputs
    if model.metadata.get("explicit_seed"):
        return generate_random_layer(model.seed, model.hidden, cols)
    return generate_random_layer(candidate_seed(model.seed, model.candidate), model.hidden, cols)
