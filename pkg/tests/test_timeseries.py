import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from co2occ.timeseries import (DataError, DayRecord, HorizonConfig, InputWindow,
                               InsufficientHistoryError, load_day_csv, window_at,
                               window_matrix, write_day_csv)


def _day(m=40, seed=0):
    rng = np.random.default_rng(seed)
    return DayRecord(
        co2=rng.integers(400, 1200, m).astype(float),
        occupancy=rng.integers(0, 10, m),
        venting=rng.integers(0, 2, m),
        day_id="t",
    )


def test_horizon_dimensions():
    cfg = HorizonConfig(30, 10)
    assert cfg.n_inputs == 92
    assert cfg.n_features == 143


@pytest.mark.parametrize("l,s", [(3, 3), (3, 0), (0, 0), (5, 7)])
def test_horizon_rejects_bad_stride(l, s):
    with pytest.raises(ValueError):
        HorizonConfig(l, s)


def test_day_record_validation():
    with pytest.raises(DataError):
        DayRecord(co2=[400, 410], occupancy=[0], venting=[0, 0])
    with pytest.raises(DataError):
        DayRecord(co2=[400, 410], occupancy=[0, 1], venting=[0, 2])
    with pytest.raises(DataError):
        DayRecord(co2=[400, -1], occupancy=[0, 1], venting=[0, 0])
    with pytest.raises(DataError):
        DayRecord(co2=[400, 410], occupancy=[0, 1.5], venting=[0, 0])


def test_day_record_is_read_only():
    day = _day()
    with pytest.raises(ValueError):
        day.co2[0] = 1.0


def test_window_small_example():
    day = DayRecord(co2=[400, 410, 420], occupancy=[1, 2, 3], venting=[0, 1, 1])
    w = window_at(day, [5, 6, 7], 2, HorizonConfig(2, 1))
    np.testing.assert_array_equal(w.co2_window, [400, 410, 420])
    np.testing.assert_array_equal(w.occ_window, [5, 6])
    np.testing.assert_array_equal(w.vent_window, [0, 1, 1])
    assert w.flatten().shape == (8,)


def test_window_needs_full_horizon():
    day = _day(40)
    cfg = HorizonConfig(30, 10)
    with pytest.raises(InsufficientHistoryError):
        window_at(day, day.occupancy, 29, cfg)
    assert window_at(day, day.occupancy, 30, cfg).flatten().shape == (92,)


def test_flat_round_trip():
    cfg = HorizonConfig(4, 2)
    x = np.arange(cfg.n_inputs, dtype=float)
    np.testing.assert_array_equal(InputWindow.from_flat(x, cfg).flatten(), x)


@settings(max_examples=40, deadline=None)
@given(m=st.integers(8, 60), l=st.integers(2, 7), seed=st.integers(0, 2**32 - 1))
def test_window_matrix_matches_window_at(m, l, seed):
    cfg = HorizonConfig(l, 1)
    if m <= l:
        return
    day = _day(m, seed)
    rows = window_matrix(day.co2, day.occupancy, day.venting, cfg)
    assert rows.shape == (m - l, 3 * l + 2)
    for j, k in enumerate(range(l, m)):
        w = window_at(day, day.occupancy, k, cfg)
        np.testing.assert_array_equal(rows[j], w.flatten())
        np.testing.assert_array_equal(w.co2_window, day.co2[k - l : k + 1])
        np.testing.assert_array_equal(w.occ_window, day.occupancy[k - l : k])


def test_csv_round_trip_is_byte_exact(tmp_path, days):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    write_day_csv(days[0], first)
    loaded = load_day_csv(first)
    assert len(loaded) == 1440
    write_day_csv(loaded, second)
    assert first.read_bytes() == second.read_bytes()
    np.testing.assert_array_equal(loaded.extras["true_co2_ppm"], days[0].extras["true_co2_ppm"])


def _write(path, rows, interval=60):
    lines = [f"# sample_interval_s={interval}", "minute_index,co2_ppm,occupancy,venting"]
    lines += [",".join(map(str, r)) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def test_bad_venting_cites_row(tmp_path):
    rows = [(k, 400 + k, 0, 0) for k in range(10)]
    rows[6] = (6, 406, 0, 2)
    f = tmp_path / "bad.csv"
    _write(f, rows)
    with pytest.raises(DataError, match="row 7"):
        load_day_csv(f)


def test_missing_column_and_non_numeric(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("minute_index,co2_ppm,venting\n0,400,0\n")
    with pytest.raises(DataError, match="occupancy"):
        load_day_csv(f)
    _write(f, [(0, 400, 0, 0), (1, "abc", 0, 0)])
    with pytest.raises(DataError, match="row 2"):
        load_day_csv(f)
    _write(f, [(0, 400, 0, 0), (1, 400, 0)])
    with pytest.raises(DataError, match="row 2"):
        load_day_csv(f)


def test_interval_mismatch_rejected(tmp_path):
    f = tmp_path / "i.csv"
    _write(f, [(k, 400, 0, 0) for k in range(5)], interval=30)
    with pytest.raises(DataError, match="interval"):
        load_day_csv(f)
    assert load_day_csv(f, sample_interval_s=30).sample_interval_s == 30


def test_day_shorter_than_horizon_rejected(tmp_path):
    f = tmp_path / "short.csv"
    _write(f, [(k, 400, 0, 0) for k in range(20)])
    with pytest.raises(DataError):
        load_day_csv(f, HorizonConfig(30, 10))
