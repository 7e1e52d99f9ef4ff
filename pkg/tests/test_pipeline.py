import json

import pytest

from co2occ.pipeline import PipelineConfig, PipelineError, dump_config, run_pipeline
from co2occ.simulator import SimConfig


def _tiny(tmp_path, **kw):
    base = dict(days=3, train_days=2, test_days=1, hidden=40, candidates=2,
                out_dir=str(tmp_path / "out"))
    base.update(kw)
    return PipelineConfig(**base)


def test_defaults_follow_reference_settings():
    cfg = PipelineConfig()
    assert (cfg.l, cfg.s, cfg.hidden, cfg.gamma, cfg.lam) == (30, 10, 1000, 1e-3, 50.0)
    assert cfg.targets == (1.0, 1.0, 1.0, 1.0, 0.1)
    assert (cfg.days, cfg.train_days, cfg.test_days, cfg.candidates) == (30, 25, 5, 100)


def test_config_round_trip_and_overrides(tmp_path):
    cfg = PipelineConfig().with_overrides(["hidden=200", "sim.noise_std=1.5", "targets=[1,1,1,0.5,0.1]"])
    assert cfg.hidden == 200 and cfg.sim.noise_std == 1.5 and cfg.targets[3] == 0.5
    path = tmp_path / "c.json"
    path.write_text(dump_config(cfg))
    assert PipelineConfig.load(path) == cfg
    with pytest.raises(ValueError):
        PipelineConfig().with_overrides(["nope=1"])
    with pytest.raises(ValueError):
        PipelineConfig().with_overrides(["hidden"])
    with pytest.raises(ValueError):
        PipelineConfig(days=3, train_days=3, test_days=1)


def test_tiny_run_writes_all_artifacts(tmp_path):
    result = run_pipeline(_tiny(tmp_path))
    out = result.out_dir
    names = ["standard_elm", "fs_elm_raw", "fs_elm_global", "fs_elm_local"]
    assert sorted(result.reports) == sorted(names)
    for f in ("config.json", "metrics.json", "plots/tolerance.svg",
              "models/standard_elm.json", "models/fs_elm_raw.json", "models/fs_elm_smoothed.json"):
        assert (out / f).is_file(), f
    for n in names:
        assert (out / "estimates" / n / "day-003.csv").is_file()
        assert (out / "reports" / f"{n}.json").is_file()
        assert (out / "plots" / n / "day-003.svg").is_file()
    assert len(list((out / "data").glob("*.csv"))) == 3
    assert not list(out.rglob("*.partial"))
    summary = json.loads((out / "metrics.json").read_text())
    assert set(summary) == set(names)


def test_loads_days_from_directory(tmp_path):
    first = run_pipeline(_tiny(tmp_path, sim=SimConfig(max_occupancy=10)))
    again = run_pipeline(_tiny(tmp_path, data_dir=str(first.out_dir / "data"),
                               out_dir=str(tmp_path / "again")))
    assert (json.loads((first.out_dir / "metrics.json").read_text())
            == json.loads((again.out_dir / "metrics.json").read_text()))


def test_stage_failure_names_stage(tmp_path):
    with pytest.raises(PipelineError) as info:
        run_pipeline(_tiny(tmp_path, data_dir=str(tmp_path / "missing")))
    assert info.value.stage == "data"
    assert isinstance(info.value.cause, FileNotFoundError)
