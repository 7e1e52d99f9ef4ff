import numpy as np
import pytest

from co2occ.smoothing import (SingularSystemError, SmoothConfig, TridiagonalSystem,
                              build_smoothing_system, smooth_all_prefixes, smooth_global,
                              smooth_local, solve_tridiagonal)


def _dense_smooth(c, lam):
    n = len(c)
    grad = np.diff(np.eye(n), axis=0)
    return np.linalg.solve(np.eye(n) + lam * grad.T @ grad, c)


def test_identity_system(rng):
    r = rng.normal(size=7)
    sys = TridiagonalSystem(np.zeros(6), np.ones(7), np.zeros(6), r)
    np.testing.assert_array_equal(solve_tridiagonal(sys), r)


def test_random_dominant_system_matches_dense(rng):
    n = 10
    sub, sup = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    diag = 2.5 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=n)
    sys = TridiagonalSystem(sub, diag, sup, rhs)
    x = solve_tridiagonal(sys)
    ref = np.linalg.solve(sys.dense(), rhs)
    assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)


def test_single_row_system():
    x = solve_tridiagonal(TridiagonalSystem(np.array([]), np.array([4.0]), np.array([]), np.array([2.0])))
    np.testing.assert_array_equal(x, [0.5])


def test_zero_pivot_raises():
    sys = TridiagonalSystem(np.array([1.0]), np.array([1.0, 1.0]), np.array([1.0]), np.array([1.0, 2.0]))
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(sys)
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(TridiagonalSystem(np.array([1.0]), np.array([0.0, 1.0]),
                                            np.array([1.0]), np.array([1.0, 2.0])))


def test_build_small_system():
    sys = build_smoothing_system([1.0, 2.0, 3.0], 1.0)
    np.testing.assert_array_equal(sys.diag, [2, 3, 2])
    np.testing.assert_array_equal(sys.sub, [-1, -1])
    np.testing.assert_array_equal(sys.sup, [-1, -1])


def test_build_lambda_zero_is_identity():
    sys = build_smoothing_system(np.arange(5.0), 0.0)
    np.testing.assert_array_equal(sys.dense(), np.eye(5))


def test_build_rejects_single_sample():
    with pytest.raises(ValueError):
        build_smoothing_system([400.0], 1.0)


def test_system_is_diagonally_dominant():
    sys = build_smoothing_system(np.zeros(12), 50.0)
    interior = sys.diag[1:-1]
    assert np.all(interior >= 1 + np.abs(sys.sub[:-1]) + np.abs(sys.sup[1:]))


def test_impulse_response_is_inverse_column():
    c = np.array([0.0, 0.0, 1.0, 0.0, 0.0])
    sys = build_smoothing_system(c, 1.0)
    inv = np.linalg.inv(sys.dense())
    np.testing.assert_allclose(solve_tridiagonal(sys), inv[:, 2], rtol=0, atol=1e-14)


def test_constant_is_preserved():
    c = np.full(25, 400.0)
    out = smooth_global(c, SmoothConfig(50.0))
    np.testing.assert_allclose(out, c, rtol=0, atol=400.0 * 1e-12)


def test_lambda_zero_and_short_inputs_unchanged(rng):
    c = rng.normal(500, 20, 30)
    np.testing.assert_array_equal(smooth_global(c, SmoothConfig(0.0)), c)
    np.testing.assert_array_equal(smooth_global(np.array([412.0]), SmoothConfig(50.0)), [412.0])


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        SmoothConfig(-1.0)


def test_sum_preserved_on_spiky_day(days):
    c = days[0].co2
    out = smooth_global(c, SmoothConfig(50.0))
    assert abs(out.sum() - c.sum()) <= 1e-9 * abs(c.sum())
    head = smooth_global(c[:300], SmoothConfig(50.0))
    np.testing.assert_allclose(head, _dense_smooth(c[:300], 50.0), rtol=1e-11)


def test_roughness_non_increasing_in_lambda(rng):
    c = rng.normal(600, 50, 150)
    norms = [np.linalg.norm(np.diff(smooth_global(c, SmoothConfig(lam))))
             for lam in (0, 0.1, 1, 5, 50, 500, 5000)]
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_huge_lambda_tends_to_mean(rng):
    for n in (2, 5, 12):
        c = rng.normal(600, 80, n)
        out = smooth_global(c, SmoothConfig(1e9))
        np.testing.assert_allclose(out, np.full(n, c.mean()), rtol=0.01)


def test_two_sample_closed_form():
    lam, c0, c1 = 3.0, 410.0, 470.0
    out = smooth_local(np.array([c0, c1]), SmoothConfig(lam))
    x0 = ((1 + lam) * c0 + lam * c1) / (1 + 2 * lam)
    x1 = (lam * c0 + (1 + lam) * c1) / (1 + 2 * lam)
    np.testing.assert_allclose(out, [x0, x1], rtol=1e-15)


def test_local_needs_two_samples():
    with pytest.raises(ValueError):
        smooth_local(np.array([400.0]), SmoothConfig())


def test_local_full_day_equals_global(days):
    c = days[1].co2
    np.testing.assert_array_equal(smooth_local(c, SmoothConfig()), smooth_global(c, SmoothConfig()))


def test_local_prefix_differs_mostly_near_endpoint(days):
    c = days[0].co2[:720]
    cfg = SmoothConfig(50.0)
    dev = np.abs(smooth_local(c[:680], cfg) - smooth_global(c, cfg)[:680])
    assert dev[:340].max() < dev[-10:].max()


def test_all_prefixes_rows_match_local(rng):
    c = rng.normal(500, 30, 40)
    rows = smooth_all_prefixes(c, SmoothConfig(10.0), first=5)
    assert np.all(np.isnan(rows[:5]))
    for k in (5, 17, 39):
        np.testing.assert_array_equal(rows[k, : k + 1], smooth_local(c[: k + 1], SmoothConfig(10.0)))
        assert np.all(np.isnan(rows[k, k + 1 :]))
