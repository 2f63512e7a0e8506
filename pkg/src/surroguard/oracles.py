"""Synthetic high-fidelity oracles.

Each oracle is a deterministic analytic function of the design point whose
shape is drawn once from a seed: smooth, regime-switching, or moderately
nonlinear.  They stand in for an expensive simulator, so each carries a
simulated per-call cost used purely in speedup arithmetic (never slept).

All functions are defined globally, not just inside the design space —
evaluating out-of-bounds points is allowed (and flagged with a warning)
because the test pipeline deliberately queries beyond the training box.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .design import DesignSpace

KINDS = ("smooth_mtow_like", "regime_switch_ttc_like", "moderate_bfl_like")

#: simulated oracle wall time per call, seconds (02h:57m:58s)
DEFAULT_COST_SECONDS = 10678.0


class OracleError(RuntimeError):
    """Non-finite oracle output — an oracle bug, never silently returned."""


@dataclass(frozen=True)
class OracleSpec:
    kind: str
    seed: int
    cost_seconds: float = DEFAULT_COST_SECONDS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown oracle kind {self.kind!r}; choose from {KINDS}")
        if self.cost_seconds <= 0:
            raise ValueError("cost_seconds must be positive")


class SyntheticOracle:
    """Base class: bounds handling, determinism, finiteness checks.

    Subclasses draw their coefficients from ``spec.seed`` at construction
    and implement ``_eval_centered`` on centered unit coordinates
    c = (x - lo)/(hi - lo) - 1/2, so c spans [-1/2, 1/2] inside the space.
    """

    def __init__(self, spec: OracleSpec, space: DesignSpace):
        self.spec = spec
        self.space = space

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.space.dim:
            raise ValueError(
                f"oracle expects {self.space.dim}-dimensional points, got {X.shape[1]}")
        if not self.space.contains(X).all():
            warnings.warn(
                "oracle evaluated outside its design space bounds",
                stacklevel=2)
        c = self.space.to_unit(X) - 0.5
        y = self._eval_centered(c)
        if not np.isfinite(y).all():
            raise OracleError(
                f"oracle {self.spec.kind!r} produced non-finite output")
        return y

    def _eval_centered(self, c: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError


class SmoothMtowLike(SyntheticOracle):
    """Globally smooth: linear trend + a quadratic bowl + gentle waves."""

    CURV = 4.0
    AMP = 1.0

    def __init__(self, spec, space):
        super().__init__(spec, space)
        d = space.dim
        rng = np.random.default_rng(spec.seed)
        self._w = rng.uniform(0.8, 1.6, d) * rng.choice([-1.0, 1.0], d)
        self._gamma = rng.uniform(0.6, 1.4, d)
        self._p = rng.normal(0.0, 1.0, (3, d))
        self._p *= 1.5 / np.linalg.norm(self._p, axis=1, keepdims=True)
        self._s = rng.uniform(0.4, 0.9, 3)
        self._phi = rng.uniform(0.0, 2.0 * np.pi, 3)
        self._b0 = 100.0

    def _eval_centered(self, c):
        y = self._b0 + c @ self._w + self.CURV * (c * c) @ self._gamma
        for m in range(3):
            y += self.AMP * self._s[m] * np.sin(np.pi * (c @ self._p[m]) + self._phi[m])
        return y

    def gradient_bound(self) -> float:
        """Analytic upper bound on the unit-coordinate gradient norm.

        Componentwise |dy/dc_j| <= |w_j| + CURV*gamma_j + AMP*pi*sum_m s_m |p_mj|
        inside the space (|c_j| <= 1/2); the bound is the Euclidean norm of
        that component vector.
        """
        comp = (np.abs(self._w) + self.CURV * self._gamma
                + self.AMP * np.pi * (self._s[:, None] * np.abs(self._p)).sum(axis=0))
        return float(np.linalg.norm(comp))


class RegimeSwitchTtcLike(SyntheticOracle):
    """Piecewise smooth with two regimes split by a nonlinear indicator.

    A smooth base response jumps by a large offset (plus a mild extra tilt)
    wherever the indicator s(c) crosses zero, so the output is
    discontinuous across a curved internal boundary.
    """

    JUMP = 8.0
    TILT = 1.5

    def __init__(self, spec, space):
        super().__init__(spec, space)
        d = space.dim
        rng = np.random.default_rng(spec.seed)
        self._w = rng.uniform(0.8, 1.6, d) * rng.choice([-1.0, 1.0], d)
        self._q = rng.normal(0.0, 1.0, d)
        self._q *= 1.2 / np.linalg.norm(self._q)
        self._phi_q = rng.uniform(0.0, 2.0 * np.pi)
        self._v = rng.normal(0.0, 1.0, d)
        self._v /= np.linalg.norm(self._v)
        self._r = rng.normal(0.0, 1.0, d)
        self._r *= 1.2 / np.linalg.norm(self._r)
        self._phi_r = rng.uniform(0.0, 2.0 * np.pi)
        self._a = rng.normal(0.0, 1.0, d)
        self._a /= np.linalg.norm(self._a)
        self._b0 = 50.0

    def indicator(self, c: np.ndarray) -> np.ndarray:
        return c @ self._v + 0.45 * np.sin(np.pi * (c @ self._r) + self._phi_r)

    def _eval_centered(self, c):
        base = self._b0 + c @ self._w + 1.2 * np.sin(np.pi * (c @ self._q) + self._phi_q)
        high = self.indicator(c) >= 0.0
        return base + high * (self.JUMP + self.TILT * (c @ self._a))


class ModerateBflLike(SyntheticOracle):
    """Smooth with moderate nonlinearity: a soft ramp plus one wave."""

    def __init__(self, spec, space):
        super().__init__(spec, space)
        d = space.dim
        rng = np.random.default_rng(spec.seed)
        self._w = rng.uniform(0.8, 1.6, d) * rng.choice([-1.0, 1.0], d)
        self._q1 = rng.normal(0.0, 1.0, d)
        self._q1 *= 2.0 / np.linalg.norm(self._q1)
        self._q2 = rng.normal(0.0, 1.0, d)
        self._q2 *= 1.3 / np.linalg.norm(self._q2)
        self._phi = rng.uniform(0.0, 2.0 * np.pi)
        self._b0 = 30.0

    @staticmethod
    def _softplus(t, beta=4.0):
        # overflow-safe log(1 + exp(beta t)) / beta
        return np.logaddexp(0.0, beta * t) / beta

    def _eval_centered(self, c):
        return (self._b0 + c @ self._w
                + 1.8 * self._softplus(c @ self._q1)
                + 1.0 * np.sin(np.pi * (c @ self._q2) + self._phi))


_CLASSES = {
    "smooth_mtow_like": SmoothMtowLike,
    "regime_switch_ttc_like": RegimeSwitchTtcLike,
    "moderate_bfl_like": ModerateBflLike,
}


def make_oracle(spec: OracleSpec, space: DesignSpace) -> SyntheticOracle:
    return _CLASSES[spec.kind](spec, space)


def oracle_eval(oracle: SyntheticOracle, X: np.ndarray) -> np.ndarray:
    """Evaluate the oracle; identical inputs always yield identical outputs."""
    return oracle(X)
