"""Gradient-boosted decision trees for binary ID/OOD classification.

Second-order boosting on the logistic loss: each stage fits a small
regression tree to the gradient/hessian statistics of the current margin,
with Newton leaf values -G / (H + eps).  Split search is exact greedy over
midpoints of adjacent distinct feature values (see the split kernel in
``accel``); training is fully deterministic — no row or feature
subsampling — so the seed is recorded for provenance only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import accel

_EPS = 1e-12
_PROB_CLIP = 1e-12


@dataclass(frozen=True)
class GbdtConfig:
    learning_rate: float = 0.1
    n_estimators: int = 100
    max_depth: int = 3
    min_samples_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _build_tree(X, g, h, depth, config):
    """Grow one tree node; trees are plain nested dicts (JSON-ready)."""
    leaf_value = -g.sum() / (h.sum() + _EPS)
    if depth >= config.max_depth or X.shape[0] < 2 * config.min_samples_leaf:
        return {"value": float(leaf_value)}
    feat, thresh, gain = accel.gbdt_best_split(X, g, h, config.min_samples_leaf)
    if feat < 0 or gain <= 0.0:
        return {"value": float(leaf_value)}
    mask = X[:, feat] <= thresh
    return {
        "feature": int(feat),
        "threshold": float(thresh),
        "left": _build_tree(X[mask], g[mask], h[mask], depth + 1, config),
        "right": _build_tree(X[~mask], g[~mask], h[~mask], depth + 1, config),
    }


def _apply_tree(node, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if "value" in nd:
            out[idx] = nd["value"]
            continue
        go_left = X[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[go_left]))
        stack.append((nd["right"], idx[~go_left]))
    return out


@dataclass
class DetectorModel:
    """Boosted-tree classifier mapping feature rows to OOD probability."""

    base_margin: float
    learning_rate: float
    trees: list = field(default_factory=list)
    feature_names: tuple = ()
    provenance: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _as_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or (self.feature_names and X.shape[1] != self.n_features):
            raise ValueError(
                f"expected feature rows of width {self.n_features}, got {X.shape}")
        return X

    def predict_margin(self, X: np.ndarray) -> np.ndarray:
        X = self._as_batch(X)
        F = np.full(X.shape[0], self.base_margin)
        for tree in self.trees:
            F += self.learning_rate * _apply_tree(tree, X)
        return F

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Probability of the positive (OOD) class for each row."""
        return _sigmoid(self.predict_margin(X))

    def to_dict(self) -> dict:
        return {
            "base_margin": self.base_margin,
            "learning_rate": self.learning_rate,
            "trees": self.trees,
            "feature_names": list(self.feature_names),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DetectorModel":
        return cls(
            base_margin=float(payload["base_margin"]),
            learning_rate=float(payload["learning_rate"]),
            trees=list(payload["trees"]),
            feature_names=tuple(payload["feature_names"]),
            provenance=dict(payload.get("provenance", {})),
        )


def gbdt_train(X: np.ndarray, labels: np.ndarray, config: GbdtConfig,
               feature_names: tuple = ()) -> DetectorModel:
    """Fit the boosted classifier; ``labels`` True marks the OOD class."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) with labels of length n")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    if labels.all() or not labels.any():
        raise ValueError("training labels must contain both classes")
    if feature_names and len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length must match feature count")

    y = labels.astype(np.float64)
    p0 = min(max(float(y.mean()), _PROB_CLIP), 1.0 - _PROB_CLIP)
    base = math.log(p0 / (1.0 - p0))
    F = np.full(X.shape[0], base)

    trees = []
    loss_trace = []
    for _ in range(config.n_estimators):
        p = _sigmoid(F)
        g = p - y
        h = p * (1.0 - p)
        tree = _build_tree(X, g, h, 0, config)
        trees.append(tree)
        F += config.learning_rate * _apply_tree(tree, X)
        pc = np.clip(_sigmoid(F), _PROB_CLIP, 1.0 - _PROB_CLIP)
        loss_trace.append(float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log1p(-pc))))

    return DetectorModel(
        base_margin=base,
        learning_rate=config.learning_rate,
        trees=trees,
        feature_names=tuple(feature_names),
        provenance={
            "n_estimators": config.n_estimators,
            "max_depth": config.max_depth,
            "min_samples_leaf": config.min_samples_leaf,
            "seed": config.seed,
            "final_logloss": loss_trace[-1],
        },
    )


def gbdt_predict_proba(model: DetectorModel, X: np.ndarray) -> np.ndarray:
    return model.predict_proba(X)


def learning_rate_grid() -> np.ndarray:
    """Detector learning-rate grid: s and 5s for s log-spaced in [1e-3, 1e-1]."""
    s = np.logspace(-3, -1, 10)
    return np.unique(np.concatenate([s, 5.0 * s]))


ESTIMATOR_GRID = (100, 250, 500)
