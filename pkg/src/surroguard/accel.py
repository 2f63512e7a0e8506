"""Kernel backend selection.

The numeric hot paths (net forward/backward, Adam epochs, tree split
scans, RBF Gram assembly) exist twice: a numba-compiled module and a pure
numpy one with identical signatures.  The environment variable

    SURROGUARD_BACKEND = auto | numba | numpy     (default: auto)

picks the implementation at import time.  ``auto`` takes numba when it
imports cleanly and silently falls back to numpy otherwise; ``numba``
makes a missing/broken numba a hard error; ``numpy`` skips numba entirely
(no import attempt, no JIT warmup).

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

from . import _np_kernels

_ENV_VAR = "SURROGUARD_BACKEND"
_CHOICES = ("auto", "numba", "numpy")


def _resolve():
    requested = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if requested not in _CHOICES:
        raise RuntimeError(
            f"{_ENV_VAR}={requested!r} is not valid; choose one of {_CHOICES}")
    if requested == "numpy":
        return "numpy", _np_kernels
    try:
        from . import _nb_kernels
    except ImportError as exc:
        if requested == "numba":
            raise RuntimeError(
                f"{_ENV_VAR}=numba but the numba backend failed to import: {exc}"
            ) from exc
        return "numpy", _np_kernels
    return "numba", _nb_kernels


BACKEND, _impl = _resolve()

fnn_forward = _impl.fnn_forward
fnn_value_grad = _impl.fnn_value_grad
fnn_adam_epoch = _impl.fnn_adam_epoch
gbdt_best_split = _impl.gbdt_best_split
rbf_gram = _impl.rbf_gram


def backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND


def implementations():
    """Both kernel modules, for cross-checking and benchmarks.

    Returns a dict mapping backend name to module; the numba entry is
    present only when numba imports cleanly.
    """
    impls = {"numpy": _np_kernels}
    try:
        from . import _nb_kernels
        impls["numba"] = _nb_kernels
    except ImportError:
        pass
    return impls
