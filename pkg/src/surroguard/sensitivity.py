"""Pointwise local-sensitivity profiles of a surrogate.

For a query point x, draw a seeded cloud of uniform perturbations
Delta ~ U(-delta, delta)^d in normalized input units and summarize the
surrogate's local behaviour with four statistics:

    SA  mean of |f(x + Delta) - f(x)|
    SV  population variance of those absolute deviations
    JA  Euclidean norm of the mean Jacobian over the perturbed points
    JV  Euclidean norm of the elementwise population variance of those
        Jacobians

The 4-vector (SA, SV, JA, JV) is the point's sensitivity profile — the
feature vector the OOD detector consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

FEATURE_NAMES = ("SA", "SV", "JA", "JV")


@dataclass(frozen=True)
class PerturbationSpec:
    """delta: max absolute per-coordinate perturbation (normalized units)."""

    delta: float = 0.05
    n_perturb: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.n_perturb < 2:
            raise ValueError("n_perturb must be >= 2 (variance needs >= 2 draws)")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class SensitivityProfile:
    sa: float
    sv: float
    ja: float
    jv: float

    def as_array(self) -> np.ndarray:
        return np.asarray([self.sa, self.sv, self.ja, self.jv])


def _cloud(spec: PerturbationSpec, dim: int) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    return rng.uniform(-spec.delta, spec.delta, (spec.n_perturb, dim))


def _predict(model, X: np.ndarray):
    """Point predictions; prefers predict_values (the GP's plain-mean path)."""
    fn = getattr(model, "predict_values", None)
    return fn(X) if fn is not None else model.predict(X)


def _values_and_jacobians(model, X: np.ndarray):
    """Use the model's fused path when it has one (FnnModel does)."""
    if hasattr(model, "value_and_jacobian"):
        return model.value_and_jacobian(X)
    return _predict(model, X), model.jacobian(X)


def _deviation_from(y_cloud: np.ndarray, f0: float):
    dy = np.abs(y_cloud - f0)
    sa = float(dy.mean())
    sv = float(((dy - sa) ** 2).mean())
    return sa, sv


def _jacobian_from(J: np.ndarray):
    mean_j = J.mean(axis=0)
    ja = float(np.linalg.norm(mean_j))
    var_j = ((J - mean_j) ** 2).mean(axis=0)
    jv = float(np.linalg.norm(var_j))
    return ja, jv


def deviation_stats(model, x, spec: PerturbationSpec):
    """(SA, SV): seeded Monte-Carlo deviation statistics at one point."""
    x = np.asarray(x, dtype=np.float64)
    f0 = _predict(model, x)
    y_cloud = _predict(model, x + _cloud(spec, x.size))
    return _deviation_from(y_cloud, f0)


def jacobian_stats(model, x, spec: PerturbationSpec):
    """(JA, JV) over the same seeded cloud deviation_stats would draw."""
    x = np.asarray(x, dtype=np.float64)
    J = model.jacobian(x + _cloud(spec, x.size))
    return _jacobian_from(J)


def profile(model, x, spec: PerturbationSpec) -> SensitivityProfile:
    """Full profile from one shared perturbation cloud."""
    x = np.asarray(x, dtype=np.float64)
    f0 = _predict(model, x)
    cloud_pts = x + _cloud(spec, x.size)
    y_cloud, J = _values_and_jacobians(model, cloud_pts)
    sa, sv = _deviation_from(y_cloud, f0)
    ja, jv = _jacobian_from(J)
    return SensitivityProfile(sa, sv, ja, jv)


def profile_batch(model, points: np.ndarray, spec: PerturbationSpec) -> list[SensitivityProfile]:
    """Profiles for each row of ``points``, in order.

    Point i uses the derived seed ``spec.seed ^ i`` so per-point clouds
    are independent but reproducible; results match individual profile()
    calls with those seeds.  All cloud evaluations are stacked into one
    batched surrogate call.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m, d = points.shape
    if m == 0:
        return []
    n = spec.n_perturb
    clouds = np.empty((m * n, d))
    for i in range(m):
        clouds[i * n:(i + 1) * n] = points[i] + _cloud(replace(spec, seed=spec.seed ^ i), d)
    f0 = np.atleast_1d(_predict(model, points))
    y_all, J_all = _values_and_jacobians(model, clouds)
    out = []
    for i in range(m):
        sl = slice(i * n, (i + 1) * n)
        sa, sv = _deviation_from(y_all[sl], f0[i])
        ja, jv = _jacobian_from(J_all[sl])
        out.append(SensitivityProfile(sa, sv, ja, jv))
    return out


def profile_matrix(profiles) -> np.ndarray:
    """Stack profiles into an (m, 4) feature matrix (SA, SV, JA, JV)."""
    if not profiles:
        return np.empty((0, 4))
    return np.vstack([p.as_array() for p in profiles])
