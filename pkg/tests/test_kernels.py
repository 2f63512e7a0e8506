"""Cross-checks between the accelerated and pure-numpy kernel paths.

Single-call granularity only: one forward pass, one gradient batch, one
split search.  Whole training runs are compared within a path, because
iterating a nonlinear optimizer amplifies last-ulp differences.
"""

import numpy as np
import pytest

from surroguard import accel
from surroguard.fnn import FnnArchitecture, he_init

BOTH = accel.implementations()
HAS_NUMBA = "numba" in BOTH

pytestmark = pytest.mark.skipif(not HAS_NUMBA,
                                reason="numba path unavailable")


def _random_net(rng, d=4):
    arch = FnnArchitecture(d, (32, 32, 64))
    params = he_init(arch, int(rng.integers(0, 2**31)))
    return params, arch.dims


def test_forward_paths_agree():
    rng = np.random.default_rng(11)
    for _ in range(10):
        params, dims = _random_net(rng)
        X = rng.normal(0.0, 1.0, (17, 4))
        y_np = BOTH["numpy"].fnn_forward(params, dims, X)
        y_nb = BOTH["numba"].fnn_forward(params, dims, X)
        np.testing.assert_allclose(y_nb, y_np, rtol=1e-12, atol=1e-12)


def test_value_grad_paths_agree():
    rng = np.random.default_rng(12)
    for _ in range(10):
        params, dims = _random_net(rng)
        X = rng.normal(0.0, 1.0, (9, 4))
        y_np, g_np = BOTH["numpy"].fnn_value_grad(params, dims, X)
        y_nb, g_nb = BOTH["numba"].fnn_value_grad(params, dims, X)
        np.testing.assert_allclose(y_nb, y_np, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(g_nb, g_np, rtol=1e-12, atol=1e-12)


def test_adam_epoch_paths_agree():
    rng = np.random.default_rng(13)
    for trial in range(5):
        params, dims = _random_net(rng)
        X = rng.normal(0.0, 1.0, (40, 4))
        y = rng.normal(0.0, 1.0, 40)
        order = rng.permutation(40).astype(np.int64)
        state = {}
        for name, mod in BOTH.items():
            p = params.copy()
            m = np.zeros_like(p)
            v = np.zeros_like(p)
            loss, step = mod.fnn_adam_epoch(
                p, dims, X, y, order, 8, 1e-3, 1e-4, m, v, 0,
                0.9, 0.999, 1e-8)
            state[name] = (p, m, v, loss, step)
        p_np, m_np, v_np, loss_np, step_np = state["numpy"]
        p_nb, m_nb, v_nb, loss_nb, step_nb = state["numba"]
        assert step_np == step_nb == 5
        np.testing.assert_allclose(loss_nb, loss_np, rtol=1e-12)
        np.testing.assert_allclose(p_nb, p_np, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(m_nb, m_np, rtol=1e-10, atol=1e-14)
        np.testing.assert_allclose(v_nb, v_np, rtol=1e-10, atol=1e-16)


def test_gbdt_split_paths_agree():
    rng = np.random.default_rng(14)
    for _ in range(20):
        n = int(rng.integers(12, 60))
        X = rng.normal(0.0, 1.0, (n, 4))
        g = rng.normal(0.0, 1.0, n)
        h = rng.uniform(0.05, 0.3, n)
        res_np = BOTH["numpy"].gbdt_best_split(X, g, h, 5)
        res_nb = BOTH["numba"].gbdt_best_split(X, g, h, 5)
        assert res_np[0] == res_nb[0]
        assert res_np[1] == pytest.approx(res_nb[1], rel=1e-12, abs=1e-12)
        assert res_np[2] == pytest.approx(res_nb[2], rel=1e-9, abs=1e-12)


def test_rbf_gram_paths_agree():
    rng = np.random.default_rng(15)
    X1 = rng.normal(0.0, 1.0, (13, 3))
    X2 = rng.normal(0.0, 1.0, (7, 3))
    k_np = BOTH["numpy"].rbf_gram(X1, X2, 0.7, 2.3)
    k_nb = BOTH["numba"].rbf_gram(X1, X2, 0.7, 2.3)
    np.testing.assert_allclose(k_nb, k_np, rtol=1e-12, atol=1e-15)


def test_backend_env_selection(monkeypatch):
    import importlib
    import surroguard.accel as accel_mod

    monkeypatch.setenv("SURROGUARD_BACKEND", "numpy")
    importlib.reload(accel_mod)
    assert accel_mod.backend() == "numpy"

    monkeypatch.setenv("SURROGUARD_BACKEND", "bogus")
    with pytest.raises(RuntimeError, match="SURROGUARD_BACKEND"):
        importlib.reload(accel_mod)

    monkeypatch.delenv("SURROGUARD_BACKEND")
    importlib.reload(accel_mod)
    assert accel_mod.backend() in ("numba", "numpy")
