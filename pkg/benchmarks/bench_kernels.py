"""Time the numba kernel path against the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py [--repeats N] [--scale S]

Each kernel is warmed up (which triggers JIT compilation on the numba
side), then timed over ``--repeats`` runs; the table reports the best
time per backend, the speedup of numba over numpy, and the largest
absolute disagreement between the two results on identical inputs.
``--scale`` multiplies the default problem sizes.
"""

import argparse
import time

import numpy as np

from surroguard import accel
from surroguard.fnn import FnnArchitecture, he_init

ADAM = (0.9, 0.999, 1e-8)


def _fnn_inputs(scale, seed=0):
    rng = np.random.default_rng(seed)
    arch = FnnArchitecture(6, (64, 128, 256))
    params = he_init(arch, seed)
    X = rng.normal(0.0, 1.0, (int(4096 * scale), 6))
    return arch.dims, params, X


def bench_fnn_forward(impl, scale):
    dims, params, X = _fnn_inputs(scale)
    return lambda: impl.fnn_forward(params, dims, X)


def bench_fnn_value_grad(impl, scale):
    dims, params, X = _fnn_inputs(scale)
    return lambda: impl.fnn_value_grad(params, dims, X)


def bench_fnn_adam_epoch(impl, scale):
    rng = np.random.default_rng(1)
    dims, params, X = _fnn_inputs(scale, seed=1)
    y = rng.normal(0.0, 1.0, X.shape[0])
    order = rng.permutation(X.shape[0])

    def run():
        p = params.copy()
        m = np.zeros_like(p)
        v = np.zeros_like(p)
        return impl.fnn_adam_epoch(p, dims, X, y, order, 32, 1e-3, 1e-4,
                                   m, v, 0, *ADAM)
    return run


def bench_gbdt_best_split(impl, scale):
    rng = np.random.default_rng(2)
    X = rng.normal(0.0, 1.0, (int(4000 * scale), 4))
    g = rng.normal(0.0, 1.0, X.shape[0])
    h = rng.uniform(0.01, 0.25, X.shape[0])
    return lambda: impl.gbdt_best_split(X, g, h, 5)


def bench_rbf_gram(impl, scale):
    rng = np.random.default_rng(3)
    X1 = rng.normal(0.0, 1.0, (int(1200 * scale), 6))
    X2 = rng.normal(0.0, 1.0, (int(900 * scale), 6))
    return lambda: impl.rbf_gram(X1, X2, 0.7, 1.3)


BENCHES = [
    ("fnn_forward", bench_fnn_forward),
    ("fnn_value_grad", bench_fnn_value_grad),
    ("fnn_adam_epoch", bench_fnn_adam_epoch),
    ("gbdt_best_split", bench_gbdt_best_split),
    ("rbf_gram", bench_rbf_gram),
]


def _best_time(run, repeats):
    run()  # warmup: JIT compile + touch caches
    run()
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        run()
        best = min(best, time.perf_counter() - t0)
    return best


def _flatten(result):
    if isinstance(result, tuple):
        return np.concatenate([np.atleast_1d(np.asarray(r, dtype=np.float64)).ravel()
                               for r in result])
    return np.asarray(result, dtype=np.float64).ravel()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--scale", type=float, default=1.0)
    args = parser.parse_args()

    impls = accel.implementations()
    print(f"active backend: {accel.backend()}   "
          f"available: {', '.join(sorted(impls))}")
    have_numba = "numba" in impls

    header = f"{'kernel':<17}{'numpy':>12}"
    if have_numba:
        header += f"{'numba':>12}{'speedup':>10}{'max|diff|':>12}"
    print(header)
    print("-" * len(header))

    for name, make in BENCHES:
        t_np = _best_time(make(impls["numpy"], args.scale), args.repeats)
        line = f"{name:<17}{t_np * 1e3:>10.2f}ms"
        if have_numba:
            t_nb = _best_time(make(impls["numba"], args.scale), args.repeats)
            diff = float(np.max(np.abs(
                _flatten(make(impls["numpy"], args.scale)())
                - _flatten(make(impls["numba"], args.scale)()))))
            line += f"{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x{diff:>12.2e}"
        print(line)


if __name__ == "__main__":
    main()
