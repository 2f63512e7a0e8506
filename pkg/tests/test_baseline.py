"""Neighbor-sigma baseline: spread math, calibration, neighbour tuning."""

import numpy as np
import pytest

from surroguard.baseline import (NEIGHBOR_GRID, baseline_detect,
                                 baseline_tune_neighbors, calibrate_sigma_t,
                                 neighbor_sigma)


def test_sigma_hand_arithmetic():
    # reference targets around yhat = 0 giving |diffs| {1, 1, 3, 3}:
    # population std of {1,1,3,3} is 1.0
    ref_x = np.array([[1.0], [2.0], [3.0], [4.0]])
    ref_y = np.array([1.0, -1.0, 3.0, -3.0])
    sigma = neighbor_sigma(np.array([[2.5]]), np.array([0.0]), ref_x, ref_y, 4)
    assert sigma[0] == pytest.approx(1.0)


def test_sigma_zero_when_neighbors_match_prediction():
    ref_x = np.random.default_rng(0).normal(0, 1, (10, 2))
    ref_y = np.full(10, 7.7)
    sigma = neighbor_sigma(np.zeros((3, 2)), np.full(3, 7.7), ref_x, ref_y, 5)
    np.testing.assert_allclose(sigma, 0.0)


def test_neighbor_set_matches_exhaustive_sort():
    rng = np.random.default_rng(1)
    ref_x = rng.normal(0, 1, (50, 3))
    ref_y = rng.normal(0, 1, 50)
    queries = rng.normal(0, 1, (8, 3))
    preds = rng.normal(0, 1, 8)
    n = 6
    got = neighbor_sigma(queries, preds, ref_x, ref_y, n)
    for i in range(8):
        order = np.argsort(np.linalg.norm(ref_x - queries[i], axis=1))[:n]
        want = np.abs(preds[i] - ref_y[order]).std()
        assert got[i] == pytest.approx(want, rel=1e-10)


def test_sigma_invariant_to_reference_permutation():
    rng = np.random.default_rng(2)
    ref_x = rng.normal(0, 1, (30, 2))
    ref_y = rng.normal(0, 1, 30)
    q = rng.normal(0, 1, (4, 2))
    p = rng.normal(0, 1, 4)
    perm = rng.permutation(30)
    a = neighbor_sigma(q, p, ref_x, ref_y, 5)
    b = neighbor_sigma(q, p, ref_x[perm], ref_y[perm], 5)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_sigma_validation():
    with pytest.raises(ValueError, match="reference"):
        neighbor_sigma(np.zeros((2, 2)), np.zeros(2), np.zeros((3, 2)),
                       np.zeros(3), 4)
    with pytest.raises(ValueError):
        neighbor_sigma(np.zeros((2, 2)), np.zeros(3), np.zeros((5, 2)),
                       np.zeros(5), 2)


def test_calibration_percentile_position():
    values = np.arange(1.0, 101.0)  # 1..100
    t = calibrate_sigma_t(values, 95.0)
    assert values[94] <= t <= values[95]  # between 95th and 96th order stats
    with pytest.raises(ValueError):
        calibrate_sigma_t(values[:10])


def test_detect_boundary_is_ood():
    sigma = np.array([0.5, 0.2, 0.8])
    flags = baseline_detect(sigma, 0.5)
    assert flags.tolist() == [True, False, True]


def test_calibration_flags_about_five_percent():
    rng = np.random.default_rng(3)
    sigmas = rng.gamma(2.0, 1.0, 400)
    t = calibrate_sigma_t(sigmas, 95.0)
    flagged = int(baseline_detect(sigmas, t).sum())
    assert abs(flagged - 20) <= 1


def test_tuning_prefers_informative_neighborhood():
    # construct a validation set where sigma with small n correlates with
    # the error almost perfectly: error grows with |x| and so does the
    # local target spread
    rng = np.random.default_rng(4)
    X = np.sort(rng.uniform(-1, 1, 120))[:, None]
    y = np.sign(X[:, 0]) * X[:, 0] ** 2 * 3.0
    pred = np.zeros(120)  # the "surrogate" predicts 0 everywhere
    best_n, table = baseline_tune_neighbors(X, pred, y, grid=(4, 20), seed=5)
    assert best_n in (4, 20)
    assert len(table) == 2 * 5
    corr_by_n = {}
    for row in table:
        corr_by_n.setdefault(row["n_neighbors"], []).append(row["pearson"])
    means = {n: np.mean(v) for n, v in corr_by_n.items()}
    assert best_n == min(means, key=lambda n: (-means[n], n))


def test_tuning_handles_degenerate_sigma():
    X = np.arange(40, dtype=float)[:, None]
    y = np.full(40, 2.0)
    pred = np.full(40, 2.0)  # sigma is identically zero -> corr := -1
    best_n, table = baseline_tune_neighbors(X, pred, y, grid=(4, 8), seed=6)
    assert best_n == 4  # all ties at -1; smallest n wins
    assert all(row["pearson"] == -1.0 for row in table)


def test_tuning_grid_of_one_is_identity():
    rng = np.random.default_rng(7)
    X = rng.normal(0, 1, (60, 2))
    y = rng.normal(0, 1, 60)
    pred = y + rng.normal(0, 0.1, 60)
    best_n, _ = baseline_tune_neighbors(X, pred, y, grid=(8,), seed=8)
    assert best_n == 8


def test_default_grid_exposed():
    assert NEIGHBOR_GRID == (4, 8, 12, 16, 20)
