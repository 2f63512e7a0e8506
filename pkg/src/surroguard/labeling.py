"""OOD ground-truth labeling from a bootstrap margin over prediction errors.

The margin is the bootstrap confidence interval of the upper tail of the
error distribution: each resample contributes its empirical
level-quantile, and the CI brackets that statistic's bootstrap
distribution.  A sample is OOD when its error reaches the margin's upper
bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float = 0.99
    n_boot: int = 2000
    method: str = "bootstrap-percentile"

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"CI lower {self.lower} exceeds upper {self.upper}")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")


@dataclass
class OodLabelSet:
    is_ood: np.ndarray
    ci: ConfidenceInterval
    n_ood: int
    ratio: float


def _check_errors(errors) -> np.ndarray:
    errors = np.asarray(errors, dtype=np.float64)
    if errors.ndim != 1 or errors.size == 0:
        raise ValueError("errors must be a nonempty 1-D vector")
    if not np.isfinite(errors).all():
        raise ValueError("errors must be finite")
    if (errors < 0).any():
        raise ValueError("errors are absolute residuals and must be nonnegative")
    return errors


def bootstrap_ci(errors, level: float = 0.99, n_boot: int = 2000,
                 seed: int = 0) -> ConfidenceInterval:
    """Percentile-bootstrap CI of the error distribution's level-quantile.

    Each of the ``n_boot`` resamples (with replacement) contributes its
    empirical ``level``-quantile (linear interpolation); the CI is the
    [(1-level)/2, 1-(1-level)/2] percentile pair of those statistics.
    Errors are sorted before resampling, so any permutation of the input
    yields the identical interval under the same seed.
    """
    errors = _check_errors(errors)
    if errors.size < 2:
        raise ValueError("bootstrap_ci needs at least 2 errors")
    if n_boot < 100:
        raise ValueError("n_boot must be >= 100")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    sorted_err = np.sort(errors)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, sorted_err.size, size=(n_boot, sorted_err.size))
    stats = np.quantile(sorted_err[idx], level, axis=1)
    tail = 0.5 * (1.0 - level)
    lower = float(np.quantile(stats, tail))
    upper = float(np.quantile(stats, 1.0 - tail))
    return ConfidenceInterval(lower, upper, level, n_boot)


def label_ood(errors, ci: ConfidenceInterval) -> OodLabelSet:
    """Flag samples whose error reaches the margin's upper bound.

    The boundary case (error exactly equal to the bound) is flagged OOD —
    risk ties resolve to the cautious side throughout the pipeline, same
    as the router's threshold convention.
    """
    errors = _check_errors(errors)
    is_ood = errors >= ci.upper
    n_ood = int(is_ood.sum())
    return OodLabelSet(is_ood, ci, n_ood, n_ood / errors.size)
