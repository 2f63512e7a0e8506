"""Feedforward ReLU surrogate: training, tuning, prediction, Jacobians.

The network is a stack of affine layers with ReLU on every layer but the
last, trained with minibatch Adam on MSE plus an L2 weight penalty.  The
parameter snapshot with the lowest validation MSE seen during training is
the returned model.  Inputs are expected in normalized (z-score) units.

Hot loops live in the kernel backend (see ``accel``): models are stored as
a flat parameter vector plus a layer-dims array and handed to the kernels
as-is.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from . import accel
from .data import Dataset

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

#: admissible hidden-layer widths (powers of two, 2**5 .. 2**10)
WIDTH_CHOICES = (32, 64, 128, 256, 512, 1024)


class TrainingDivergedError(RuntimeError):
    """Loss went NaN/Inf; message names the epoch."""


@dataclass(frozen=True)
class FnnArchitecture:
    """Three ReLU hidden layers, widths non-decreasing, scalar output."""

    input_dim: int
    hidden_widths: tuple[int, int, int] = (32, 64, 128)

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        widths = tuple(int(w) for w in self.hidden_widths)
        if len(widths) != 3:
            raise ValueError("exactly 3 hidden layers are supported")
        for w in widths:
            if w not in WIDTH_CHOICES:
                raise ValueError(
                    f"hidden width {w} not in the admissible set {WIDTH_CHOICES}")
        if not (widths[0] <= widths[1] <= widths[2]):
            raise ValueError(
                f"hidden widths must be non-decreasing (low-to-high), got {widths}")
        object.__setattr__(self, "hidden_widths", widths)

    @property
    def dims(self) -> np.ndarray:
        return np.asarray((self.input_dim, *self.hidden_widths, 1), dtype=np.int64)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    weight_decay: float = 0.0
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        b = int(self.batch_size)
        if b < 8 or b > 128 or (b & (b - 1)) != 0:
            raise ValueError(
                f"batch_size must be a power of 2 in [8, 128], got {self.batch_size}")
        e = int(self.epochs)
        if e != self.epochs or not (50 <= e <= 500):
            raise ValueError(f"epochs must be an integer in [50, 500], got {self.epochs}")


class FnnModel:
    """Immutable ReLU network over a flat parameter vector.

    Trained models have exactly three hidden layers, but the class accepts
    any depth >= 1 so hand-built nets (including a bare affine map) can be
    constructed directly in tests and tools.
    """

    def __init__(self, params: np.ndarray, dims: np.ndarray, provenance: dict | None = None):
        params = np.ascontiguousarray(np.asarray(params, dtype=np.float64))
        dims = np.ascontiguousarray(np.asarray(dims, dtype=np.int64))
        if dims.ndim != 1 or dims.size < 2 or (dims < 1).any():
            raise ValueError("dims must be [d_in, ..., d_out] with positive entries")
        if dims[-1] != 1:
            raise ValueError("only scalar-output networks are supported")
        expected = int(sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(dims.size - 1)))
        if params.shape != (expected,):
            raise ValueError(
                f"parameter vector has {params.shape[0] if params.ndim == 1 else 'bad'} "
                f"entries, expected {expected} for dims {dims.tolist()}")
        if not np.isfinite(params).all():
            raise ValueError("parameters must be finite")
        self._params = params
        self._dims = dims
        self.provenance = dict(provenance or {})
        self._params.setflags(write=False)

    @classmethod
    def from_layers(cls, layers, provenance=None) -> "FnnModel":
        """Build from [(W_0, b_0), (W_1, b_1), ...]; W_l maps d_l -> d_{l+1}."""
        dims = [np.asarray(layers[0][0]).shape[0]]
        chunks = []
        for w, b in layers:
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError("each layer needs W of shape (d_in, d_out) and b of (d_out,)")
            if w.shape[0] != dims[-1]:
                raise ValueError("layer shapes do not chain")
            dims.append(w.shape[1])
            chunks.append(w.ravel())
            chunks.append(b)
        return cls(np.concatenate(chunks), np.asarray(dims, dtype=np.int64), provenance)

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        out = []
        off = 0
        for l in range(self._dims.size - 1):
            d_in, d_out = int(self._dims[l]), int(self._dims[l + 1])
            w = self._params[off:off + d_in * d_out].reshape(d_in, d_out).copy()
            off += d_in * d_out
            b = self._params[off:off + d_out].copy()
            off += d_out
            out.append((w, b))
        return out

    @property
    def input_dim(self) -> int:
        return int(self._dims[0])

    @property
    def params(self) -> np.ndarray:
        return self._params

    @property
    def dims(self) -> np.ndarray:
        return self._dims

    def _as_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        xb = np.ascontiguousarray(np.atleast_2d(x))
        if xb.shape[1] != self.input_dim:
            raise ValueError(
                f"point dimension {xb.shape[1]} does not match model input {self.input_dim}")
        return xb, single

    def predict(self, x):
        xb, single = self._as_batch(x)
        y = accel.fnn_forward(self._params, self._dims, xb)
        return float(y[0]) if single else y

    # uniform surrogate protocol: some surrogates (the GP) return richer
    # prediction objects from predict(); predict_values always means the
    # plain point prediction
    predict_values = predict

    def jacobian(self, x):
        """Analytic input gradient; zero subgradient at exact ReLU kinks."""
        xb, single = self._as_batch(x)
        _, g = accel.fnn_value_grad(self._params, self._dims, xb)
        return g[0] if single else g

    def value_and_jacobian(self, x):
        """Fused forward + input-gradient pass (one kernel call)."""
        xb, single = self._as_batch(x)
        y, g = accel.fnn_value_grad(self._params, self._dims, xb)
        return (float(y[0]), g[0]) if single else (y, g)

    def to_dict(self) -> dict:
        return {
            "kind": "relu_mlp",
            "dims": self._dims.tolist(),
            "params": [float(v) for v in self._params],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FnnModel":
        return cls(np.asarray(d["params"], dtype=np.float64),
                   np.asarray(d["dims"], dtype=np.int64),
                   d.get("provenance"))


def fnn_predict(model: FnnModel, x):
    return model.predict(x)


def fnn_jacobian(model: FnnModel, x):
    return model.jacobian(x)


def he_init(arch: FnnArchitecture, seed: int) -> np.ndarray:
    """He fan-in initialization (weights ~ N(0, 2/fan_in), biases 0)."""
    rng = np.random.default_rng(seed)
    dims = arch.dims
    chunks = []
    for l in range(dims.size - 1):
        d_in, d_out = int(dims[l]), int(dims[l + 1])
        chunks.append(rng.normal(0.0, np.sqrt(2.0 / d_in), d_in * d_out))
        chunks.append(np.zeros(d_out))
    return np.concatenate(chunks)


@dataclass
class TrainResult:
    model: FnnModel
    best_epoch: int
    best_val_mse: float
    train_mse_trace: np.ndarray
    val_mse_trace: np.ndarray


def _holdout_split(dataset: Dataset, seed: int, frac: float = 0.1):
    n = len(dataset)
    n_val = max(1, int(round(frac * n)))
    if n_val >= n:
        raise ValueError("dataset too small to carve a validation split")
    perm = np.random.default_rng(seed).permutation(n)
    return dataset.subset(np.sort(perm[n_val:])), dataset.subset(np.sort(perm[:n_val]))


def fnn_train(train: Dataset, arch: FnnArchitecture, config: TrainConfig,
              val: Dataset | None = None) -> TrainResult:
    """Minibatch-Adam training with best-validation-epoch selection.

    When ``val`` is omitted a seeded 10% holdout is carved from ``train``
    for snapshot selection.  Raises TrainingDivergedError naming the epoch
    if the loss goes non-finite.  Identical (data, arch, config, seed)
    runs produce bitwise-equal parameters.
    """
    if len(train) == 0:
        raise ValueError("training set is empty")
    if train.dim != arch.input_dim:
        raise ValueError(
            f"dataset dimension {train.dim} does not match architecture "
            f"input_dim {arch.input_dim}")
    if val is None:
        train, val = _holdout_split(train, config.seed)

    dims = arch.dims
    params = he_init(arch, config.seed)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    step = 0
    rng = np.random.default_rng(config.seed + 1)  # epoch shuffles, separate stream

    x_tr = np.ascontiguousarray(train.X)
    y_tr = np.ascontiguousarray(train.y)
    x_val = np.ascontiguousarray(val.X)
    y_val = np.ascontiguousarray(val.y)

    best_params = params.copy()
    best_val = np.inf
    best_epoch = -1
    train_trace = np.empty(config.epochs)
    val_trace = np.empty(config.epochs)
    for epoch in range(config.epochs):
        order = rng.permutation(len(train)).astype(np.int64)
        loss, step = accel.fnn_adam_epoch(
            params, dims, x_tr, y_tr, order, int(config.batch_size),
            float(config.learning_rate), float(config.weight_decay),
            m, v, step, ADAM_BETA1, ADAM_BETA2, ADAM_EPS)
        with np.errstate(over="ignore", invalid="ignore"):
            resid = accel.fnn_forward(params, dims, x_val) - y_val
            val_mse = float(resid @ resid) / len(val)
        if not (np.isfinite(loss) and np.isfinite(val_mse)):
            raise TrainingDivergedError(
                f"training loss became non-finite at epoch {epoch + 1} "
                f"(lr={config.learning_rate}, weight_decay={config.weight_decay})")
        train_trace[epoch] = loss
        val_trace[epoch] = val_mse
        if val_mse < best_val:
            best_val = val_mse
            best_epoch = epoch
            best_params = params.copy()

    model = FnnModel(best_params, dims, provenance={
        "hidden_widths": list(arch.hidden_widths),
        "learning_rate": config.learning_rate,
        "weight_decay": config.weight_decay,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "seed": config.seed,
        "best_epoch": best_epoch,
        "best_val_mse": best_val,
    })
    return TrainResult(model, best_epoch, best_val, train_trace, val_trace)


# ---------------------------------------------------------------------------
# hyperparameter grids

def _logspace_union(base_exp_lo, base_exp_hi, count, factor):
    s = np.logspace(base_exp_lo, base_exp_hi, count)
    return np.unique(np.concatenate([s, factor * s]))


def full_learning_rates() -> np.ndarray:
    """s U 3s with s = logspace(-4, -1, 10)."""
    return _logspace_union(-4, -1, 10, 3.0)


def full_weight_decays() -> np.ndarray:
    """s U 5s with s = logspace(-4, -1, 10)."""
    return _logspace_union(-4, -1, 10, 5.0)


def full_batch_sizes() -> tuple[int, ...]:
    return (8, 16, 32, 64, 128)


def full_epoch_grid() -> tuple[int, ...]:
    """50 epoch counts evenly spaced over [50, 500], rounded to integers."""
    return tuple(int(v) for v in np.unique(np.rint(np.linspace(50, 500, 50))))


def default_arch_grid(input_dim: int) -> list[FnnArchitecture]:
    return [FnnArchitecture(input_dim, (32, 64, 128))]


def full_arch_grid(input_dim: int) -> list[FnnArchitecture]:
    archs = []
    for widths in itertools.combinations_with_replacement(WIDTH_CHOICES, 3):
        archs.append(FnnArchitecture(input_dim, widths))
    return archs


def default_train_grid(seed: int = 0) -> list[TrainConfig]:
    """Desk-scale 3x3 learning-rate/decay grid at epochs {50, 100}."""
    grid = []
    for lr in (1e-3, 1e-2, 3e-2):
        for wd in (1e-4, 1e-3, 1e-2):
            for epochs in (50, 100):
                grid.append(TrainConfig(lr, wd, batch_size=32, epochs=epochs, seed=seed))
    return grid


def full_train_grid(seed: int = 0) -> list[TrainConfig]:
    grid = []
    for lr in full_learning_rates():
        for wd in full_weight_decays():
            for batch in full_batch_sizes():
                for epochs in full_epoch_grid():
                    grid.append(TrainConfig(float(lr), float(wd), batch, int(epochs), seed))
    return grid


# ---------------------------------------------------------------------------
# cross-validated grid search

@dataclass
class GridSearchResult:
    best_arch: FnnArchitecture
    best_config: TrainConfig
    best_score: float
    table: list[dict]


def grid_search_cv(dataset: Dataset, arch_grid, config_grid, k: int = 5,
                   seed: int = 0) -> GridSearchResult:
    """Pick the (arch, config) pair with lowest mean validation NRMSE.

    The NRMSE denominator is the full dataset's raw target range so fold
    scores share one scale.  Diverged cells are marked failed (score inf)
    without aborting the sweep; ties keep the first cell in grid order.
    Per-fold seeds are ``config.seed + fold`` so folds are independent but
    reproducible.
    """
    from .data import kfold_split

    arch_grid = list(arch_grid)
    config_grid = list(config_grid)
    if not arch_grid or not config_grid:
        raise ValueError("grids must be nonempty")
    y_range = float(dataset.y.max() - dataset.y.min())
    if y_range <= 0:
        raise ValueError("dataset target range is degenerate")
    folds = kfold_split(len(dataset), k, seed)

    table = []
    best = None
    for cell, (arch, config) in enumerate(itertools.product(arch_grid, config_grid)):
        scores = []
        for fold_idx, (tr_idx, va_idx) in enumerate(folds):
            fold_cfg = replace(config, seed=config.seed + fold_idx)
            row = {
                "cell": cell,
                "fold": fold_idx,
                "hidden_widths": "x".join(str(w) for w in arch.hidden_widths),
                "learning_rate": config.learning_rate,
                "weight_decay": config.weight_decay,
                "batch_size": config.batch_size,
                "epochs": config.epochs,
            }
            try:
                res = fnn_train(dataset.subset(tr_idx), arch, fold_cfg,
                                val=dataset.subset(va_idx))
                score = float(np.sqrt(res.best_val_mse)) / y_range
                row.update(val_nrmse=score, status="ok")
            except TrainingDivergedError as exc:
                score = np.inf
                row.update(val_nrmse="", status=f"diverged: {exc}")
            scores.append(score)
            table.append(row)
        mean_score = float(np.mean(scores))
        if best is None or mean_score < best[0]:
            best = (mean_score, arch, config)
    return GridSearchResult(best[1], best[2], best[0], table)
