"""Minority oversampling for the ID/OOD detector's training set.

Plain SMOTE interpolates between a minority point and one of its k
nearest minority neighbours; the borderline variant restricts the
interpolation seeds to minority points whose neighbourhood (among all
points) is majority-dominated but not fully majority — the class-boundary
band where synthetic support helps most.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METHODS = ("smote", "borderline_smote")


class OversampleError(ValueError):
    pass


@dataclass(frozen=True)
class OversampleConfig:
    method: str = "borderline_smote"
    k_neighbors: int = 5
    ratio: float = 1.0  # target minority/majority count ratio
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError("ratio must lie in (0, 1]")


def _knn_indices(X_from: np.ndarray, X_to: np.ndarray, k: int,
                 exclude_self: bool) -> np.ndarray:
    """Indices (into X_to) of the k nearest neighbours of each X_from row."""
    d2 = (
        (X_from * X_from).sum(axis=1)[:, None]
        + (X_to * X_to).sum(axis=1)[None, :]
        - 2.0 * (X_from @ X_to.T)
    )
    if exclude_self:
        np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def oversample(X: np.ndarray, labels: np.ndarray, config: OversampleConfig):
    """Augment the minority class up to ``ratio`` times the majority count.

    Returns ``(X_aug, labels_aug, n_synthetic)``.  Original rows are
    always returned unchanged, in their original order, with synthetic
    minority rows appended.  A no-op (already at ratio) returns the inputs
    as-is.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) with labels of length n")
    n_true = int(labels.sum())
    n_false = labels.size - n_true
    if n_true == 0 or n_false == 0:
        raise OversampleError("oversampling needs both classes present")
    minority_is_true = n_true <= n_false
    n_min, n_maj = (n_true, n_false) if minority_is_true else (n_false, n_true)

    target = int(np.ceil(config.ratio * n_maj))
    n_new = target - n_min
    if n_new <= 0:
        return X, labels, 0

    min_idx = np.flatnonzero(labels == minority_is_true)
    if n_min < config.k_neighbors + 1:
        raise OversampleError(
            f"minority class has {n_min} samples but k={config.k_neighbors} "
            f"neighbours are requested; use k <= {n_min - 1}")
    X_min = X[min_idx]

    if config.method == "smote":
        seeds = np.arange(n_min)
    else:
        # a minority row is its own nearest neighbour in X, so fetch one
        # extra column and drop the self slot
        nn_all = _knn_indices(X_min, X, config.k_neighbors + 1, exclude_self=False)
        maj_frac = np.empty(n_min)
        for i in range(n_min):
            neigh = [j for j in nn_all[i] if j != min_idx[i]][: config.k_neighbors]
            lab = labels[neigh]
            maj_frac[i] = float((lab != minority_is_true).mean()) if neigh else 0.0
        seeds = np.flatnonzero((maj_frac >= 0.5) & (maj_frac < 1.0))
        if seeds.size == 0:
            raise OversampleError(
                "no borderline minority points (every minority neighbourhood is "
                "either safe or pure-majority); use method='smote'")

    nn_min = _knn_indices(X_min, X_min, config.k_neighbors, exclude_self=True)
    rng = np.random.default_rng(config.seed)
    synth = np.empty((n_new, X.shape[1]))
    for s in range(n_new):
        base = seeds[int(rng.integers(0, seeds.size))]
        neighbour = nn_min[base, int(rng.integers(0, config.k_neighbors))]
        u = rng.uniform(0.0, 1.0)
        synth[s] = X_min[base] + u * (X_min[neighbour] - X_min[base])

    X_aug = np.vstack([X, synth])
    labels_aug = np.concatenate([labels, np.full(n_new, minority_is_true)])
    return X_aug, labels_aug, n_new
