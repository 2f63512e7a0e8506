"""Cross-validated tuning of the oversampler + boosted-tree detector.

Oversampling happens strictly inside each training fold — validation folds
are scored exactly as given, so the selection metric (mean validation
AUPR) is leak-free.  Cells that fail (degenerate fold, oversampler
preconditions) are recorded in the table and excluded from selection.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .clsmetrics import aupr, pr_curve
from .data import kfold_split
from .gbdt import GbdtConfig, gbdt_train
from .oversample import OversampleConfig, oversample


def default_oversample_grid():
    return tuple(
        OversampleConfig(method=m, k_neighbors=5, ratio=r)
        for m, r in itertools.product(("smote", "borderline_smote"), (0.5, 1.0))
    )


def full_oversample_grid():
    return tuple(
        OversampleConfig(method=m, k_neighbors=k, ratio=r)
        for m, k, r in itertools.product(
            ("smote", "borderline_smote"), (5, 10, 15), (0.25, 0.5, 0.75, 1.0))
    )


def default_gbdt_grid():
    return tuple(
        GbdtConfig(learning_rate=lr, n_estimators=n)
        for lr, n in itertools.product((0.1, 0.5), (100, 250))
    )


@dataclass(frozen=True)
class DetectorTuneResult:
    best_oversample: OversampleConfig
    best_gbdt: GbdtConfig
    best_score: float  # mean validation AUPR
    table: tuple  # one dict per (cell, fold)


def detector_cv_tune(features: np.ndarray, labels: np.ndarray,
                     oversample_grid=None, gbdt_grid=None,
                     k: int = 5, seed: int = 0) -> DetectorTuneResult:
    """Grid search over oversampler and booster settings with k-fold CV."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ValueError("features must be (n, d) with labels of length n")
    if oversample_grid is None:
        oversample_grid = default_oversample_grid()
    if gbdt_grid is None:
        gbdt_grid = default_gbdt_grid()

    folds = kfold_split(features.shape[0], k, seed)
    table = []
    best = None
    best_score = -np.inf
    for cell, (os_cfg, gb_cfg) in enumerate(
            itertools.product(oversample_grid, gbdt_grid)):
        fold_scores = []
        failed = False
        for fold_idx, (tr, va) in enumerate(folds):
            row = {
                "cell": cell,
                "fold": fold_idx,
                "method": os_cfg.method,
                "k_neighbors": os_cfg.k_neighbors,
                "ratio": os_cfg.ratio,
                "learning_rate": gb_cfg.learning_rate,
                "n_estimators": gb_cfg.n_estimators,
                "val_aupr": float("nan"),
                "status": "ok",
            }
            try:
                fold_os = replace(os_cfg, seed=os_cfg.seed + fold_idx)
                X_tr, y_tr, _ = oversample(features[tr], labels[tr], fold_os)
                model = gbdt_train(X_tr, y_tr, gb_cfg)
                scores = model.predict_proba(features[va])
                score = aupr(pr_curve(scores, labels[va]))
                row["val_aupr"] = score
                fold_scores.append(score)
            except ValueError as exc:
                row["status"] = f"failed: {exc}"
                failed = True
            table.append(row)
        if failed or not fold_scores:
            continue
        mean_score = float(np.mean(fold_scores))
        if mean_score > best_score:
            best_score = mean_score
            best = (os_cfg, gb_cfg)
    if best is None:
        raise ValueError("every grid cell failed cross-validation")
    return DetectorTuneResult(
        best_oversample=best[0],
        best_gbdt=best[1],
        best_score=best_score,
        table=tuple(table),
    )
