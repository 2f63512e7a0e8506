"""Datasets, normalization, k-fold splitting, and CSV persistence."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import DesignSpace


class DegenerateRangeError(ValueError):
    """Constant targets or a constant input dimension: scaling undefined."""


class CsvFormatError(ValueError):
    """Malformed dataset file; message names the offending line."""


@dataclass(eq=False)
class Dataset:
    """Design points with their scalar targets.

    ``X`` has shape (n, d) and ``y`` shape (n,); ``n = 0`` is legal (an
    empty file parses) but training operations reject it.  ``space`` is
    optional metadata used for bounds bookkeeping.
    """

    X: np.ndarray
    y: np.ndarray
    space: DesignSpace | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        if X.ndim != 2:
            raise ValueError("X must be 2-D (n, d)")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y shape {y.shape} does not match X rows {X.shape[0]}")
        if X.size and not np.isfinite(X).all():
            raise ValueError("X contains non-finite entries")
        if y.size and not np.isfinite(y).all():
            raise ValueError("y contains non-finite entries")
        if self.space is not None and X.shape[1] != self.space.dim:
            raise ValueError(
                f"X has {X.shape[1]} columns but the space has {self.space.dim}")
        self.X = X
        self.y = y

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.space)


@dataclass(frozen=True, eq=False)
class NormalizationStats:
    """Z-score parameters for inputs plus the raw target range.

    Targets are never rescaled; ``y_min``/``y_max`` exist so error metrics
    can be normalized by the raw target range.
    """

    x_mean: np.ndarray
    x_std: np.ndarray
    y_min: float
    y_max: float

    @property
    def y_range(self) -> float:
        return self.y_max - self.y_min

    @classmethod
    def fit(cls, dataset: Dataset) -> "NormalizationStats":
        if len(dataset) < 2:
            raise ValueError("normalization fit needs at least 2 samples")
        y_min = float(dataset.y.min())
        y_max = float(dataset.y.max())
        if y_max <= y_min:
            raise DegenerateRangeError(
                "targets are constant; the target range (and NRMSE) is undefined")
        mean = dataset.X.mean(axis=0)
        std = dataset.X.std(axis=0)  # population std: normalized std is exactly 1
        if (std <= 0.0).any():
            bad = int(np.argmin(std))
            raise DegenerateRangeError(
                f"input dimension {bad} is constant; z-score undefined")
        return cls(mean, std, y_min, y_max)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.x_mean) / self.x_std

    def invert(self, Xn: np.ndarray) -> np.ndarray:
        return np.asarray(Xn, dtype=np.float64) * self.x_std + self.x_mean

    def to_dict(self) -> dict:
        return {
            "x_mean": [float(v) for v in self.x_mean],
            "x_std": [float(v) for v in self.x_std],
            "y_min": self.y_min,
            "y_max": self.y_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(np.asarray(d["x_mean"], dtype=np.float64),
                   np.asarray(d["x_std"], dtype=np.float64),
                   float(d["y_min"]), float(d["y_max"]))


def normalize_fit(dataset: Dataset) -> NormalizationStats:
    return NormalizationStats.fit(dataset)


def kfold_split(n: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded k-fold partition of range(n) into (train, validation) pairs.

    Folds are disjoint, cover all indices, and differ in size by at most
    one; indices within each side are sorted ascending.
    """
    if isinstance(n, Dataset):
        n = len(n)
    if k < 2:
        raise ValueError("k-fold needs k >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the sample count n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    folds = []
    stop = 0
    for size in sizes:
        start, stop = stop, stop + int(size)
        val = np.sort(perm[start:stop])
        train = np.sort(np.concatenate([perm[:start], perm[stop:]]))
        folds.append((train, val))
    return folds


def _format(v: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly
    return repr(float(v))


def save_csv(path, dataset: Dataset) -> None:
    """Write `x0,...,x{d-1},y` rows; floats round-trip exactly."""
    path = Path(path)
    d = dataset.dim
    header = ",".join([f"x{j}" for j in range(d)] + ["y"])
    lines = [header]
    for i in range(len(dataset)):
        cells = [_format(v) for v in dataset.X[i]]
        cells.append(_format(dataset.y[i]))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def load_csv(path, space: DesignSpace | None = None) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise CsvFormatError(f"{path}: file not found") from None
    lines = text.splitlines()
    if not lines:
        raise CsvFormatError(f"{path}:1: missing header row")
    header = lines[0].split(",")
    if len(header) < 2 or header[-1] != "y":
        raise CsvFormatError(
            f"{path}:1: expected header 'x0,...,x{{d-1}},y', got {lines[0]!r}")
    d = len(header) - 1
    expected = [f"x{j}" for j in range(d)] + ["y"]
    if header != expected:
        raise CsvFormatError(
            f"{path}:1: expected header {','.join(expected)!r}, got {lines[0]!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != d + 1:
            raise CsvFormatError(
                f"{path}:{lineno}: expected {d + 1} columns, found {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise CsvFormatError(
                f"{path}:{lineno}: non-numeric cell in {line!r}") from None
    arr = np.asarray(rows, dtype=np.float64).reshape(len(rows), d + 1)
    return Dataset(arr[:, :d], arr[:, d], space)
