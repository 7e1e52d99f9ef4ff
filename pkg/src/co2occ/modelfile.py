"""Versioned JSON model files.

Arrays are stored as base64 of little-endian float64 bytes, row-major, with
their shapes alongside. Feature blocks follow the order P, I, D, occ, vent.
"""

from __future__ import annotations

import base64
import json
import math
from pathlib import Path

import numpy as np

from .fselm import MODES, FsElmModel, ScaleParams, ZmaxTargets
from .timeseries import HorizonConfig

SCHEMA_VERSION = 1


class ModelFileError(ValueError):
    pass


def _encode(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    a = np.frombuffer(raw, dtype="<f8").astype(float)
    return a.reshape(d["shape"])


def _num(x: float):
    return None if x is None or not math.isfinite(x) else float(x)


def model_to_dict(model: FsElmModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": model.mode,
        "config": {"l": model.config.l, "s": model.config.s},
        "hidden": model.hidden,
        "gamma": model.gamma,
        "seed": int(model.seed),
        "candidate": int(model.candidate),
        "scale": None if model.scale is None else [float(a) for a in model.scale.as_tuple()],
        "zmax_targets": None if model.targets is None else list(model.targets.as_tuple()),
        "clamp_max": _num(model.clamp_max),
        "train_rmse": _num(model.train_rmse),
        "feature_order": ["p", "i", "d", "occ", "vent"],
        "metadata": model.metadata,
        "r": _encode(model.r),
        "b": _encode(model.b),
        "beta": _encode(model.beta),
    }


def model_from_dict(d: dict) -> FsElmModel:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFileError(f"unsupported model schema version {version!r}")
    if d.get("mode") not in MODES:
        raise ModelFileError(f"unknown model mode {d.get('mode')!r}")
    try:
        return FsElmModel(
            mode=d["mode"],
            config=HorizonConfig(int(d["config"]["l"]), int(d["config"]["s"])),
            r=_decode(d["r"]),
            b=_decode(d["b"]),
            beta=_decode(d["beta"]),
            scale=ScaleParams(*d["scale"]) if d.get("scale") else None,
            targets=ZmaxTargets(*d["zmax_targets"]) if d.get("zmax_targets") else None,
            gamma=float(d["gamma"]),
            seed=int(d["seed"]),
            candidate=int(d.get("candidate", 0)),
            clamp_max=math.inf if d.get("clamp_max") is None else float(d["clamp_max"]),
            train_rmse=math.nan if d.get("train_rmse") is None else float(d["train_rmse"]),
            metadata=d.get("metadata", {}),
        )
    except (KeyError, TypeError) as exc:
        raise ModelFileError(f"malformed model file: {exc}") from None


def dumps_model(model: FsElmModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"


def save_model(model: FsElmModel, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> FsElmModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(d)

