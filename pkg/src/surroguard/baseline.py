"""Neighbor-spread uncertainty baseline for OOD detection.

For a query x with surrogate prediction yhat, sigma(x) is the population
standard deviation of |yhat - y_i| over the n reference points nearest to
x in (normalized) input space.  A query is flagged OOD when sigma meets or
exceeds a threshold calibrated as the 95th percentile of validation
sigmas.  This is the distance/spread heuristic the learned detector is
compared against.
"""

from __future__ import annotations

import numpy as np

from .data import kfold_split

NEIGHBOR_GRID = (4, 8, 12, 16, 20)


def neighbor_sigma(query_x: np.ndarray, query_pred: np.ndarray,
                   reference_x: np.ndarray, reference_y: np.ndarray,
                   n_neighbors: int) -> np.ndarray:
    """Spread of the prediction against its n nearest reference targets."""
    query_x = np.atleast_2d(np.asarray(query_x, dtype=np.float64))
    query_pred = np.atleast_1d(np.asarray(query_pred, dtype=np.float64))
    reference_x = np.asarray(reference_x, dtype=np.float64)
    reference_y = np.asarray(reference_y, dtype=np.float64)
    if query_x.shape[0] != query_pred.shape[0]:
        raise ValueError("one prediction per query point is required")
    if reference_x.ndim != 2 or reference_y.shape != (reference_x.shape[0],):
        raise ValueError("reference set must be (m, d) with m targets")
    if n_neighbors < 1:
        raise ValueError("n_neighbors must be >= 1")
    if reference_x.shape[0] < n_neighbors:
        raise ValueError(
            f"reference set has {reference_x.shape[0]} points; "
            f"{n_neighbors} neighbours requested")

    d2 = (
        (query_x * query_x).sum(axis=1)[:, None]
        + (reference_x * reference_x).sum(axis=1)[None, :]
        - 2.0 * (query_x @ reference_x.T)
    )
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :n_neighbors]
    diffs = np.abs(query_pred[:, None] - reference_y[nearest])
    return diffs.std(axis=1)


def calibrate_sigma_t(validation_sigmas: np.ndarray,
                      percentile: float = 95.0) -> float:
    sigmas = np.asarray(validation_sigmas, dtype=np.float64)
    if sigmas.ndim != 1 or sigmas.size < 20:
        raise ValueError("calibration needs at least 20 validation sigma values")
    return float(np.percentile(sigmas, percentile))


def baseline_detect(sigma: np.ndarray, sigma_t: float) -> np.ndarray:
    """OOD iff sigma >= sigma_t (the boundary routes to the safe side)."""
    return np.asarray(sigma, dtype=np.float64) >= sigma_t


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Correlation with degenerate (constant) inputs scored as -1."""
    a = a - a.mean()
    b = b - b.mean()
    va = float(a @ a)
    vb = float(b @ b)
    if va == 0.0 or vb == 0.0:
        return -1.0
    return float((a @ b) / np.sqrt(va * vb))


def baseline_tune_neighbors(X: np.ndarray, predictions: np.ndarray,
                            targets: np.ndarray, grid=NEIGHBOR_GRID,
                            k: int = 5, seed: int = 0):
    """Pick the neighbour count whose sigma best tracks the true error.

    Five-fold CV on the validation set: each fold's queries take the other
    folds as reference, and the candidate n maximizing the mean Pearson
    correlation between sigma and |prediction - target| wins.  Ties go to
    the smallest n (the grid is scanned in ascending order).  Returns
    ``(best_n, table)``.
    """
    X = np.asarray(X, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or predictions.shape != targets.shape or \
            predictions.shape != (X.shape[0],):
        raise ValueError("X, predictions and targets must align")
    grid = tuple(sorted(grid))
    folds = kfold_split(X.shape[0], k, seed)

    table = []
    best_n = None
    best_corr = -np.inf
    for n in grid:
        corrs = []
        for fold_idx, (ref, qry) in enumerate(folds):
            sigma = neighbor_sigma(X[qry], predictions[qry], X[ref],
                                   targets[ref], n)
            corr = _pearson(sigma, np.abs(predictions[qry] - targets[qry]))
            corrs.append(corr)
            table.append({"n_neighbors": n, "fold": fold_idx,
                          "pearson": corr})
        mean_corr = float(np.mean(corrs))
        if mean_corr > best_corr:
            best_corr = mean_corr
            best_n = n
    return best_n, tuple(table)
