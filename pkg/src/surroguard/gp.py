"""Exact Gaussian-process regression with an isotropic RBF kernel.

Hyperparameters (lengthscale, signal variance, noise variance) are fitted
by maximizing the log marginal likelihood with analytic gradients,
gradient ascent with backtracking line search, and seeded multi-restart
initialization from a log-uniform prior box.  All linear algebra goes
through one Cholesky factorization per candidate, with an escalating
jitter fallback for near-singular Gram matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import accel
from .data import Dataset

_LOG_2PI = np.log(2.0 * np.pi)
#: relative jitter start (scaled by trace(K)/n) and max doublings
_JITTER_REL = 1e-10
_JITTER_STEPS = 6


class GpFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class RbfKernel:
    """k(x, x') = signal_variance * exp(-||x - x'||^2 / (2 lengthscale^2))."""

    lengthscale: float
    signal_variance: float
    noise_variance: float = 0.0

    def __post_init__(self):
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be positive")
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")

    def log_params(self) -> np.ndarray:
        """(log lengthscale, log signal_variance, log noise_variance)."""
        return np.log([self.lengthscale, self.signal_variance,
                       max(self.noise_variance, 1e-300)])


def kernel_eval(kernel: RbfKernel, x: np.ndarray, x2: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x.shape != x2.shape:
        raise ValueError("kernel_eval needs equal-dimension points")
    d2 = float(((x - x2) ** 2).sum())
    return kernel.signal_variance * np.exp(-0.5 * d2 / kernel.lengthscale ** 2)


def _chol_with_jitter(A: np.ndarray, trace_scale: float):
    """Cholesky of A, escalating diagonal jitter up to the policy cap.

    Returns (L, jitter_used); raises GpFitError when even the largest
    jitter fails.
    """
    base = _JITTER_REL * trace_scale
    jitter = 0.0
    for attempt in range(_JITTER_STEPS + 1):
        try:
            if jitter > 0.0:
                L = np.linalg.cholesky(A + jitter * np.eye(A.shape[0]))
            else:
                L = np.linalg.cholesky(A)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter = base if attempt == 0 else jitter * 2.0
    raise GpFitError(
        f"Cholesky failed after {_JITTER_STEPS} jitter escalations "
        f"(final jitter {jitter:.3e})")


def lml_and_grad(theta: np.ndarray, X: np.ndarray, yc: np.ndarray):
    """Log marginal likelihood and its gradient in log-hyperparameters.

    ``theta`` = (log l, log sf2, log sn2); ``yc`` must be centered.
    Returns (lml, grad). A Cholesky failure surfaces as GpFitError so the
    optimizer can discard the candidate.
    """
    ell, sf2, sn2 = np.exp(theta)
    n = X.shape[0]
    K = accel.rbf_gram(X, X, ell, sf2)
    A = K + sn2 * np.eye(n)
    L, jitter = _chol_with_jitter(A, float(np.trace(K)) / n)
    alpha = cho_solve((L, True), yc)
    lml = (-0.5 * float(yc @ alpha)
           - float(np.log(np.diag(L)).sum())
           - 0.5 * n * _LOG_2PI)

    Kinv = cho_solve((L, True), np.eye(n))
    M = np.outer(alpha, alpha) - Kinv
    d2 = (
        (X * X).sum(axis=1)[:, None]
        + (X * X).sum(axis=1)[None, :]
        - 2.0 * (X @ X.T)
    )
    np.maximum(d2, 0.0, out=d2)
    grad = np.empty(3)
    grad[0] = 0.5 * float((M * (K * (d2 / ell ** 2))).sum())
    grad[1] = 0.5 * float((M * K).sum())
    grad[2] = 0.5 * sn2 * float(np.trace(M))
    return lml, grad


class GpModel:
    """Fitted exact GP: kernel + training set + cached Cholesky/alpha."""

    def __init__(self, kernel: RbfKernel, X: np.ndarray, y: np.ndarray,
                 provenance: dict | None = None):
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(y, dtype=np.float64))
        if X.ndim != 2 or y.shape != (X.shape[0],) or X.shape[0] < 1:
            raise ValueError("X must be (n, d) with matching y of length n")
        self.kernel = kernel
        self.X = X
        self.y_mean = float(y.mean())
        self.y = y
        yc = y - self.y_mean
        n = X.shape[0]
        K = accel.rbf_gram(X, X, kernel.lengthscale, kernel.signal_variance)
        A = K + kernel.noise_variance * np.eye(n)
        self.L, self.jitter = _chol_with_jitter(A, float(np.trace(K)) / n)
        self.alpha = cho_solve((self.L, True), yc)
        resid = A @ self.alpha + self.jitter * self.alpha - yc
        if float(np.abs(resid).max()) > 1e-8 * max(1.0, float(np.abs(yc).max())):
            raise GpFitError("cached alpha fails the linear-system residual check")
        self.provenance = dict(provenance or {})

    def to_dict(self) -> dict:
        return {
            "kind": "rbf_gp",
            "lengthscale": self.kernel.lengthscale,
            "signal_variance": self.kernel.signal_variance,
            "noise_variance": self.kernel.noise_variance,
            "X": [[float(v) for v in row] for row in self.X],
            "y": [float(v) for v in self.y],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GpModel":
        kernel = RbfKernel(float(d["lengthscale"]), float(d["signal_variance"]),
                           float(d["noise_variance"]))
        return cls(kernel, np.asarray(d["X"], dtype=np.float64),
                   np.asarray(d["y"], dtype=np.float64), d.get("provenance"))

    def predict(self, x):
        """Single point -> (mean, std); batch -> PredictResult."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            res = gp_predict(self, x[None, :])
            return float(res.mean[0]), float(res.std[0])
        return gp_predict(self, x)

    def predict_values(self, x):
        """Posterior mean only (uniform surrogate protocol)."""
        x = np.asarray(x, dtype=np.float64)
        res = gp_predict(self, np.atleast_2d(x))
        return float(res.mean[0]) if x.ndim == 1 else res.mean

    def value_and_jacobian(self, x):
        """Posterior mean and its analytic input gradient.

        With the squared-exponential kernel the mean is
        sum_j alpha_j k(x, x_j) + y_mean, so its gradient is
        sum_j alpha_j k(x, x_j) (x_j - x) / lengthscale^2.
        """
        x = np.asarray(x, dtype=np.float64)
        X = np.ascontiguousarray(np.atleast_2d(x))
        if X.shape[1] != self.X.shape[1]:
            raise ValueError("query dimension does not match the training inputs")
        k = self.kernel
        k_star = accel.rbf_gram(X, self.X, k.lengthscale, k.signal_variance)
        mean = k_star @ self.alpha + self.y_mean
        weighted = k_star * self.alpha[None, :]
        J = (weighted @ self.X
             - weighted.sum(axis=1)[:, None] * X) / k.lengthscale ** 2
        if x.ndim == 1:
            return float(mean[0]), J[0]
        return mean, J

    def jacobian(self, x):
        return self.value_and_jacobian(x)[1]


@dataclass
class PredictResult:
    mean: np.ndarray
    std: np.ndarray
    n_clamped: int  # negative predictive variances clamped to zero


def gp_predict(model: GpModel, X: np.ndarray) -> PredictResult:
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if X.shape[1] != model.X.shape[1]:
        raise ValueError("query dimension does not match the training inputs")
    k = model.kernel
    k_star = accel.rbf_gram(X, model.X, k.lengthscale, k.signal_variance)
    mean = k_star @ model.alpha + model.y_mean
    v = solve_triangular(model.L, k_star.T, lower=True)
    var = k.signal_variance - (v * v).sum(axis=0) + k.noise_variance
    n_clamped = int((var < 0.0).sum())
    np.maximum(var, 0.0, out=var)
    return PredictResult(mean, np.sqrt(var), n_clamped)


@dataclass(frozen=True)
class GpFitConfig:
    restarts: int = 10
    seed: int = 0
    max_iter: int = 120
    grad_tol: float = 1e-3

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def _median_pairwise_distance(X: np.ndarray, rng) -> float:
    n = X.shape[0]
    sub = X if n <= 256 else X[rng.choice(n, 256, replace=False)]
    d2 = (
        (sub * sub).sum(axis=1)[:, None]
        + (sub * sub).sum(axis=1)[None, :]
        - 2.0 * (sub @ sub.T)
    )
    np.maximum(d2, 0.0, out=d2)
    vals = np.sqrt(d2[np.triu_indices(sub.shape[0], k=1)])
    med = float(np.median(vals))
    return med if med > 0 else 1.0


def _ascend(theta0, X, yc, bounds, cfg: GpFitConfig):
    """Backtracking-line-search gradient ascent on the LML surface."""
    lo, hi = bounds
    theta = np.clip(theta0, lo, hi)
    try:
        f, g = lml_and_grad(theta, X, yc)
    except GpFitError:
        return None
    for _ in range(cfg.max_iter):
        if float(np.abs(g).max()) < cfg.grad_tol:
            break
        step = 0.5
        improved = False
        g_norm2 = float(g @ g)
        while step > 1e-7:
            cand = np.clip(theta + step * g, lo, hi)
            try:
                f_cand, g_cand = lml_and_grad(cand, X, yc)
            except GpFitError:
                step *= 0.5
                continue
            if f_cand > f + 1e-4 * step * g_norm2:
                theta, f, g = cand, f_cand, g_cand
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return f, theta


def gp_fit(dataset: Dataset, config: GpFitConfig = GpFitConfig()) -> GpModel:
    """Best-of-restarts LML fit.

    Restart 0 starts from a median-distance heuristic; the rest draw
    log-uniformly from a prior box around it, all from one seeded stream
    so best-of-k LML is nondecreasing in k at fixed seed.
    """
    if len(dataset) < 2:
        raise ValueError("gp_fit needs at least 2 samples")
    X = np.ascontiguousarray(dataset.X)
    y = dataset.y
    y_var = float(y.var())
    if y_var <= 0:
        raise ValueError("targets are constant; nothing to fit")
    yc = y - float(y.mean())

    rng = np.random.default_rng(config.seed)
    ell0 = _median_pairwise_distance(X, rng)
    # prior box in log space; the noise floor keeps Cholesky honest
    lo = np.log([0.05 * ell0, 0.05 * y_var, 1e-8 * y_var])
    hi = np.log([20.0 * ell0, 20.0 * y_var, 0.5 * y_var])
    inits = [np.log([ell0, y_var, 1e-4 * y_var])]
    for _ in range(config.restarts - 1):
        inits.append(rng.uniform(lo, hi))

    best = None
    for theta0 in inits:
        out = _ascend(np.asarray(theta0), X, yc, (lo, hi), config)
        if out is None:
            continue
        f, theta = out
        if best is None or f > best[0]:
            best = (f, theta)
    if best is None:
        raise GpFitError("every restart failed its initial Cholesky")

    lml_best, theta = best
    ell, sf2, sn2 = np.exp(theta)
    kernel = RbfKernel(float(ell), float(sf2), float(sn2))
    return GpModel(kernel, X, y, provenance={
        "lml": float(lml_best),
        "restarts": config.restarts,
        "seed": config.seed,
    })
