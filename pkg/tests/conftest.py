import numpy as np
import pytest

from co2occ.fselm import FS_ELM, STANDARD_ELM, TrainingSet, train
from co2occ.pipeline import smooth_days
from co2occ.simulator import SimConfig, generate_days
from co2occ.timeseries import HorizonConfig


@pytest.fixture(scope="session")
def horizon():
    return HorizonConfig()


@pytest.fixture(scope="session")
def sim_days():
    """Four default synthetic days (seed 0)."""
    return generate_days(SimConfig(), 4, master_seed=0)


@pytest.fixture(scope="session")
def days(sim_days):
    return [sd.day for sd in sim_days]


@pytest.fixture(scope="session")
def small_model(days, horizon):
    """Cheap FS-ELM trained on three days: enough to exercise the estimator."""
    data = TrainingSet.from_days(days[:3], horizon)
    return train(data, horizon, hidden=120, gamma=1e-3, mode=FS_ELM, master_seed=3, n_candidates=2)


@pytest.fixture(scope="session")
def small_standard_model(days, horizon):
    data = TrainingSet.from_days(days[:3], horizon)
    return train(data, horizon, hidden=120, gamma=1e-3, mode=STANDARD_ELM, master_seed=3, n_candidates=2)


@pytest.fixture(scope="session")
def smoothed_model(days, horizon):
    """FS-ELM fitted to globally smoothed days; its estimates track real occupancy."""
    data = TrainingSet.from_days(smooth_days(days[:3], 50.0), horizon)
    return train(data, horizon, hidden=300, gamma=1e-3, mode=FS_ELM, master_seed=1, n_candidates=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
