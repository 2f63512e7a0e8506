"""Risk-based routing between the cheap surrogate and the expensive oracle.

A query is answered by the surrogate when the detector's risk score falls
below the router threshold and escalated to the high-fidelity oracle
otherwise; a score exactly at the threshold escalates (the boundary is
safety-side).  The evaluation report aggregates accuracy (NRMSE before and
after routing, error-decrease percentage) and the timing model behind the
speedup figures: T_o per oracle call, T_s bare surrogate inference, T_d
the full profiling + scoring path, and p the surrogate-routed fraction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import DegenerateRangeError
from .gbdt import DetectorModel
from .sensitivity import PerturbationSpec, profile_batch, profile_matrix

SURROGATE = "surrogate"
HIGH_FIDELITY = "hf"


@dataclass(frozen=True)
class RouterConfig:
    detector: DetectorModel
    perturbation: PerturbationSpec
    risk_threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.risk_threshold <= 1.0:
            raise ValueError("risk_threshold must lie in [0, 1]")


def nrmse(predictions: np.ndarray, targets: np.ndarray,
          y_min: float, y_max: float) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.ndim != 1 or predictions.shape != targets.shape:
        raise ValueError("predictions and targets must be 1-D and aligned")
    if predictions.size == 0:
        raise ValueError("need at least one sample")
    if not y_max > y_min:
        raise DegenerateRangeError("y_max must exceed y_min")
    rmse = float(np.sqrt(np.mean((targets - predictions) ** 2)))
    return rmse / (y_max - y_min)


def decr_err(pre_nrmse: float, post_nrmse: float) -> float:
    """Error-decrease percentage; negative when routing made things worse."""
    if not pre_nrmse > 0.0:
        raise ValueError("pre_nrmse must be positive")
    return (pre_nrmse - post_nrmse) / pre_nrmse * 100.0


def speedup_pure(t_oracle: float, t_surrogate: float) -> float:
    if not (t_oracle > 0.0 and t_surrogate > 0.0):
        raise ValueError("times must be positive")
    return t_oracle / t_surrogate


def speedup_hybrid(t_oracle: float, t_surrogate: float, t_detector: float,
                   p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if t_detector < 0.0 or t_surrogate < 0.0 or t_oracle <= 0.0:
        raise ValueError("times must be nonnegative (oracle time positive)")
    denom = t_detector + p * t_surrogate + (1.0 - p) * t_oracle
    if not denom > 0.0:
        raise ValueError("per-query hybrid time must be positive")
    return t_oracle / denom


@dataclass(frozen=True)
class TimingModel:
    """Per-query seconds for each path plus the routed fraction."""

    t_oracle: float
    t_surrogate: float
    t_detector: float
    p: float

    def __post_init__(self):
        if min(self.t_oracle, self.t_surrogate, self.t_detector) < 0.0:
            raise ValueError("times must be >= 0")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    def speedup_pure(self) -> float:
        return speedup_pure(self.t_oracle, self.t_surrogate)

    def speedup_hybrid(self) -> float:
        return speedup_hybrid(self.t_oracle, self.t_surrogate,
                              self.t_detector, self.p)

    def to_dict(self) -> dict:
        return {"t_oracle": self.t_oracle, "t_surrogate": self.t_surrogate,
                "t_detector": self.t_detector, "p": self.p}


def _predict_values(surrogate, X: np.ndarray) -> np.ndarray:
    fn = getattr(surrogate, "predict_values", None)
    return fn(X) if fn is not None else surrogate.predict(X)


def _risk_scores(surrogate, X_norm: np.ndarray, router: RouterConfig):
    features = profile_matrix(profile_batch(surrogate, X_norm, router.perturbation))
    return router.detector.predict_proba(features)


def route_predict(x_raw: np.ndarray, surrogate, oracle, router: RouterConfig,
                  stats):
    """Answer one raw-space query; returns ``(value, route, risk)``.

    ``stats`` carries the input normalization the surrogate was trained
    under; the oracle is only invoked when the query escalates.
    """
    x_raw = np.asarray(x_raw, dtype=np.float64)
    if x_raw.ndim != 1:
        raise ValueError("route_predict takes a single point")
    x_norm = stats.apply(x_raw[None, :])
    risk = float(_risk_scores(surrogate, x_norm, router)[0])
    if risk < router.risk_threshold:
        return float(_predict_values(surrogate, x_norm)[0]), SURROGATE, risk
    return float(oracle(x_raw[None, :])[0]), HIGH_FIDELITY, risk


@dataclass
class HybridReport:
    risk: np.ndarray
    routed_hf: np.ndarray
    y_surrogate: np.ndarray
    y_hybrid: np.ndarray
    nrmse_pure: float
    nrmse_hybrid: float
    decr_err_pct: float
    n_surrogate: int
    n_hf: int
    timing: TimingModel
    speedup_pure: float
    speedup_hybrid: float
    missed_ood: int = -1  # -1 when no reference labels were supplied
    false_alarms: int = -1
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Deterministic metrics only; measured times live in ``timing``."""
        return {
            "nrmse_pure": self.nrmse_pure,
            "nrmse_hybrid": self.nrmse_hybrid,
            "decr_err_pct": self.decr_err_pct,
            "n_surrogate": self.n_surrogate,
            "n_hf": self.n_hf,
            "p": self.timing.p,
            "missed_ood": self.missed_ood,
            "false_alarms": self.false_alarms,
        }


def evaluate_hybrid(test, surrogate, oracle, router: RouterConfig, stats,
                    ood_labels=None) -> HybridReport:
    """Route every test point and aggregate accuracy + timing metrics.

    ``test`` is a raw-space dataset whose targets are taken as ground
    truth; the oracle is actually called for escalated points, so an
    oracle failure surfaces here as it would in production.
    """
    X_norm = stats.apply(test.X)

    t0 = time.perf_counter()
    risk = _risk_scores(surrogate, X_norm, router)
    t_detector = (time.perf_counter() - t0) / len(test)

    t0 = time.perf_counter()
    y_surr = _predict_values(surrogate, X_norm)
    t_surrogate = max((time.perf_counter() - t0) / len(test), 1e-12)

    routed_hf = risk >= router.risk_threshold
    y_hybrid = y_surr.copy()
    if routed_hf.any():
        y_hybrid[routed_hf] = oracle(test.X[routed_hf])

    y_min, y_max = stats.y_min, stats.y_max
    pure = nrmse(y_surr, test.y, y_min, y_max)
    hyb = nrmse(y_hybrid, test.y, y_min, y_max)
    decr = decr_err(pure, hyb) if pure > 0.0 else 0.0

    n_hf = int(routed_hf.sum())
    p = 1.0 - n_hf / len(test)
    timing = TimingModel(
        t_oracle=oracle.spec.cost_seconds,
        t_surrogate=t_surrogate,
        t_detector=t_detector,
        p=p,
    )

    missed = false_alarm = -1
    if ood_labels is not None:
        ood_labels = np.asarray(ood_labels, dtype=bool)
        if ood_labels.shape != (len(test),):
            raise ValueError("ood_labels must align with the test set")
        missed = int(np.sum(ood_labels & ~routed_hf))
        false_alarm = int(np.sum(~ood_labels & routed_hf))

    return HybridReport(
        risk=risk,
        routed_hf=routed_hf,
        y_surrogate=y_surr,
        y_hybrid=y_hybrid,
        nrmse_pure=pure,
        nrmse_hybrid=hyb,
        decr_err_pct=decr,
        n_surrogate=len(test) - n_hf,
        n_hf=n_hf,
        timing=timing,
        speedup_pure=timing.speedup_pure(),
        speedup_hybrid=timing.speedup_hybrid(),
        missed_ood=missed,
        false_alarms=false_alarm,
    )
