"""Design space definition and Latin-hypercube sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class DesignSpace:
    """Axis-aligned box of design variables.

    ``lower`` and ``upper`` are per-dimension closed bounds; every
    dimension must have positive width.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.ndim != 1 or hi.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("bounds must be 1-D arrays of equal length")
        if lo.size < 1:
            raise ValueError("design space needs at least one dimension")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("bounds must be finite")
        if not (lo < hi).all():
            bad = int(np.argmin(hi - lo))
            raise ValueError(
                f"lower bound must be strictly below upper (dimension {bad}: "
                f"[{lo[bad]}, {hi[bad]}])")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, dim: int, lower: float = 0.0, upper: float = 1.0) -> "DesignSpace":
        """Same scalar bounds in every dimension."""
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def to_unit(self, X: np.ndarray) -> np.ndarray:
        """Map points to the unit cube (linear per-dimension rescale)."""
        return (np.asarray(X, dtype=np.float64) - self.lower) / self.widths

    def from_unit(self, U: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(U, dtype=np.float64) * self.widths

    def contains(self, X: np.ndarray) -> np.ndarray:
        """Per-row bounds check, inclusive on both ends."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return ((X >= self.lower) & (X <= self.upper)).all(axis=1)

    def sub_box(self, lower_frac: float, upper_frac: float) -> "DesignSpace":
        """Sub-box given as unit-cube fractions, e.g. (0.0, 0.6).

        Used by the selection-bias generator: training designs are drawn
        from the sub-box while test designs cover the full space.
        """
        if not (0.0 <= lower_frac < upper_frac <= 1.0):
            raise ValueError(
                f"sub-box fractions must satisfy 0 <= lo < hi <= 1, got "
                f"({lower_frac}, {upper_frac})")
        w = self.widths
        return DesignSpace(self.lower + lower_frac * w, self.lower + upper_frac * w)


def lhs_sample(space: DesignSpace, n: int, seed: int) -> np.ndarray:
    """Latin-hypercube sample of ``n`` points, shape (n, dim).

    Each dimension is cut into ``n`` equal strata and receives exactly one
    point per stratum, at an independent uniform offset; stratum order is
    an independent seeded permutation per dimension.
    """
    if n < 1:
        raise ValueError("lhs_sample needs n >= 1")
    rng = np.random.default_rng(seed)
    d = space.dim
    U = np.empty((n, d))
    for j in range(d):
        perm = rng.permutation(n)
        offs = rng.uniform(0.0, 1.0, size=n)
        U[:, j] = (perm + offs) / n
    return space.from_unit(U)
