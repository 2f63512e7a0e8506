"""Feedforward surrogate: forward math, gradients, training, grid search."""

import numpy as np
import pytest

from surroguard.data import Dataset
from surroguard.fnn import (FnnArchitecture, FnnModel, GridSearchResult,
                            TrainConfig, TrainingDivergedError, fnn_train,
                            full_epoch_grid, full_learning_rates,
                            full_weight_decays, grid_search_cv, he_init)


def _toy_model(d=3, widths=(32, 32, 32), seed=0):
    arch = FnnArchitecture(d, widths)
    return FnnModel(he_init(arch, seed), arch.dims)


# ---------------------------------------------------------------------------
# architecture / config validation

def test_architecture_constraints():
    FnnArchitecture(4, (32, 64, 128))
    with pytest.raises(ValueError):
        FnnArchitecture(4, (64, 32, 128))  # widths must be non-decreasing
    with pytest.raises(ValueError):
        FnnArchitecture(4, (32, 64))  # exactly three hidden layers
    with pytest.raises(ValueError):
        FnnArchitecture(4, (32, 48, 64))  # width not in the allowed set
    with pytest.raises(ValueError):
        FnnArchitecture(0, (32, 32, 32))


def test_train_config_constraints():
    TrainConfig(1e-3, 0.0, batch_size=8, epochs=50)
    TrainConfig(1e-3, 0.0, batch_size=128, epochs=500)
    with pytest.raises(ValueError):
        TrainConfig(0.0, 0.0)
    with pytest.raises(ValueError):
        TrainConfig(1e-3, -1.0)
    with pytest.raises(ValueError):
        TrainConfig(1e-3, 0.0, batch_size=12)  # not a power of two
    with pytest.raises(ValueError):
        TrainConfig(1e-3, 0.0, batch_size=256)  # out of range
    with pytest.raises(ValueError):
        TrainConfig(1e-3, 0.0, epochs=49)
    with pytest.raises(ValueError):
        TrainConfig(1e-3, 0.0, epochs=501)


def test_hyperparameter_grids():
    lrs = full_learning_rates()
    s = np.logspace(-4, -1, 10)
    assert set(np.round(np.log10(lrs), 9)) == \
        set(np.round(np.log10(np.concatenate([s, 3 * s])), 9))
    wds = full_weight_decays()
    assert wds.min() == pytest.approx(1e-4) and wds.max() == pytest.approx(0.5)
    epochs = full_epoch_grid()
    assert epochs[0] == 50 and epochs[-1] == 500
    assert all(isinstance(e, int) for e in epochs)


# ---------------------------------------------------------------------------
# forward + gradient math

def test_forward_matches_manual_numpy():
    model = _toy_model(seed=5)
    rng = np.random.default_rng(6)
    X = rng.normal(0, 1, (11, 3))
    a = X
    for W, b in model.layers()[:-1]:
        a = np.maximum(a @ W + b, 0.0)
    W, b = model.layers()[-1]
    manual = (a @ W + b).ravel()
    np.testing.assert_allclose(model.predict(X), manual, rtol=1e-12, atol=1e-12)


def test_single_point_prediction_is_scalar():
    model = _toy_model()
    y = model.predict(np.zeros(3))
    assert isinstance(y, float)
    assert model.predict_values(np.zeros(3)) == y


def test_jacobian_against_central_differences():
    rng = np.random.default_rng(7)
    eps = 1e-6
    checked = 0
    for trial in range(30):
        model = _toy_model(seed=100 + trial)
        x = rng.normal(0, 1, 3)
        J = model.jacobian(x)
        fd = np.empty(3)
        skip = False
        for j in range(3):
            xp, xm = x.copy(), x.copy()
            xp[j] += eps
            xm[j] -= eps
            # reject probes whose step straddles a ReLU kink: the analytic
            # gradient itself changes when an activation flips
            if not np.array_equal(model.jacobian(xp), model.jacobian(xm)):
                skip = True
                break
            fd[j] = (model.predict(xp) - model.predict(xm)) / (2 * eps)
        if skip:
            continue
        checked += 1
        np.testing.assert_allclose(J, fd, rtol=1e-5, atol=1e-8)
    assert checked >= 10


def test_value_and_jacobian_consistency():
    model = _toy_model(seed=9)
    X = np.random.default_rng(10).normal(0, 1, (7, 3))
    y, J = model.value_and_jacobian(X)
    np.testing.assert_array_equal(y, model.predict(X))
    np.testing.assert_array_equal(J, model.jacobian(X))


def test_model_is_locally_linear_between_kinks():
    # a ReLU net restricted to one activation region is exactly affine
    model = _toy_model(seed=11)
    x = np.random.default_rng(12).normal(0, 1, 3)
    J = model.jacobian(x)
    for t in (1e-7, 5e-7, 1e-6):
        delta = t * np.array([1.0, -0.5, 0.25])
        pred = model.predict(x + delta)
        lin = model.predict(x) + J @ delta
        assert pred == pytest.approx(lin, abs=1e-9)


def test_serialization_round_trip_bitwise():
    model = _toy_model(seed=13)
    back = FnnModel.from_dict(model.to_dict())
    X = np.random.default_rng(14).normal(0, 1, (5, 3))
    np.testing.assert_array_equal(back.predict(X), model.predict(X))


# ---------------------------------------------------------------------------
# training

def _linear_dataset(n=256, d=3, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, d))
    w = np.array([1.5, -2.0, 0.5])[:d]
    y = X @ w + 0.3 + noise * rng.normal(size=n)
    return Dataset(X, y)


def test_training_fits_linear_data():
    ds = _linear_dataset(seed=1)
    res = fnn_train(ds, FnnArchitecture(3), TrainConfig(1e-2, 0.0, epochs=200, seed=2))
    assert res.best_val_mse < 1e-3
    assert res.best_epoch >= 0
    assert len(res.train_mse_trace) == 200


def test_training_is_bitwise_reproducible():
    ds = _linear_dataset(seed=3)
    cfg = TrainConfig(1e-2, 1e-4, epochs=50, seed=4)
    a = fnn_train(ds, FnnArchitecture(3), cfg)
    b = fnn_train(ds, FnnArchitecture(3), cfg)
    np.testing.assert_array_equal(a.model.params, b.model.params)
    np.testing.assert_array_equal(a.val_mse_trace, b.val_mse_trace)


def test_weight_decay_shrinks_weights():
    ds = _linear_dataset(seed=5)
    free = fnn_train(ds, FnnArchitecture(3), TrainConfig(1e-2, 0.0, epochs=100, seed=6))
    decayed = fnn_train(ds, FnnArchitecture(3), TrainConfig(1e-2, 0.1, epochs=100, seed=6))
    assert np.linalg.norm(decayed.model.params) < np.linalg.norm(free.model.params)


def test_best_epoch_snapshot_is_not_last_epoch_params():
    # with a noisy target the last epoch is rarely the best one; the model
    # must carry the best-validation snapshot
    ds = _linear_dataset(seed=7, noise=0.5)
    res = fnn_train(ds, FnnArchitecture(3), TrainConfig(3e-2, 0.0, epochs=150, seed=8))
    assert res.best_val_mse == res.val_mse_trace.min()
    assert res.best_epoch == int(np.argmin(res.val_mse_trace))


def test_divergence_raises_with_epoch():
    X = np.random.default_rng(9).uniform(-1, 1, (64, 2))
    y = np.full(64, 1e300)  # astronomically scaled targets overflow the loss
    ds = Dataset(X, y * np.linspace(1, 2, 64))
    with pytest.raises(TrainingDivergedError, match="epoch"):
        fnn_train(ds, FnnArchitecture(2), TrainConfig(0.1, 0.0, epochs=50, seed=10))


def test_dimension_mismatch_rejected():
    ds = _linear_dataset(d=2, seed=11)
    with pytest.raises(ValueError, match="dimension"):
        fnn_train(ds, FnnArchitecture(3), TrainConfig(1e-2, 0.0, epochs=50))


# ---------------------------------------------------------------------------
# grid search

def test_grid_search_table_and_selection():
    ds = _linear_dataset(n=120, seed=12)
    arch = FnnArchitecture(3)
    grid = [TrainConfig(1e-2, 0.0, epochs=50, seed=0),
            TrainConfig(1e-3, 0.0, epochs=50, seed=0)]
    res = grid_search_cv(ds, [arch], grid, k=3, seed=13)
    assert isinstance(res, GridSearchResult)
    assert len(res.table) == 2 * 3  # cells x folds
    by_cell = {}
    for row in res.table:
        by_cell.setdefault(row["cell"], []).append(row["val_nrmse"])
    means = {c: np.mean(v) for c, v in by_cell.items()}
    best_cell = min(means, key=lambda c: (means[c], c))
    assert res.best_score == pytest.approx(means[best_cell])
    chosen = [g for g in grid if g.learning_rate == res.best_config.learning_rate]
    assert chosen


def test_grid_search_marks_diverged_cells():
    rng = np.random.default_rng(14)
    X = rng.uniform(-1, 1, (60, 2))
    ds = Dataset(X, 1e300 * (1 + X[:, 0]))
    grid = [TrainConfig(0.2, 0.0, epochs=50, seed=0)]
    res = grid_search_cv(ds, [FnnArchitecture(2)], grid, k=3, seed=15)
    assert np.isinf(res.best_score)
    assert all(r["status"].startswith("diverged") for r in res.table)


def test_grid_search_tie_keeps_first():
    ds = _linear_dataset(n=90, seed=16)
    cfg = TrainConfig(1e-2, 0.0, epochs=50, seed=0)
    res = grid_search_cv(ds, [FnnArchitecture(3)], [cfg, cfg], k=3, seed=17)
    first_rows = [r for r in res.table if r["cell"] == 0]
    assert res.best_config == cfg
    assert res.best_score == pytest.approx(
        np.mean([r["val_nrmse"] for r in first_rows]))
