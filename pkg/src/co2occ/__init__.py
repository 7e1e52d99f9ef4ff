"""Indoor occupancy estimation from CO2 measurements.

Feature-scaled extreme learning machine regression, Laplacian smoothing of
CO2 series (whole-day and causal), feedback estimation with per-sample
re-estimation, estimation metrics and a mass-balance day simulator.
"""

__version__ = "0.1.0"

from .estimator import (EstimateTrace, EstimationConfig, clamp_and_round, estimate_day,
                        estimate_day_feedback, estimate_day_local)
from .features import FeatureMatrix, FeatureVector, apply_features, build_feature_matrix
from .fselm import (FsElmModel, ScaleParams, TrainingSet, ZmaxTargets, design_scale,
                    generate_random_layer, hidden_outputs, predict, sigmoid, solve_ridge, train)
from .metrics import MetricsReport, compute_metrics, emit_report
from .modelfile import load_model, save_model
from .simulator import SimConfig, SimDay, generate_day, generate_days, step_zone
from .smoothing import (SmoothConfig, TridiagonalSystem, build_smoothing_system, smooth_global,
                        smooth_local, solve_tridiagonal)
from .timeseries import DayRecord, HorizonConfig, InputWindow, load_day_csv, window_at, write_day_csv
