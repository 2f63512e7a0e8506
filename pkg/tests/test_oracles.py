"""Synthetic oracle behaviour: determinism, smoothness, regime structure."""

import numpy as np
import pytest

from surroguard.design import DesignSpace, lhs_sample
from surroguard.oracles import (KINDS, DEFAULT_COST_SECONDS, OracleError,
                                OracleSpec, SyntheticOracle, make_oracle,
                                oracle_eval)


def _space(d=4):
    return DesignSpace.cube(d, 0.0, 1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        OracleSpec("no_such_kind", seed=0)
    with pytest.raises(ValueError):
        OracleSpec("smooth_mtow_like", seed=0, cost_seconds=0.0)
    assert OracleSpec("smooth_mtow_like", seed=0).cost_seconds == DEFAULT_COST_SECONDS


def test_every_kind_is_deterministic():
    space = _space()
    X = lhs_sample(space, 30, seed=1)
    for kind in KINDS:
        a = make_oracle(OracleSpec(kind, seed=9), space)
        b = make_oracle(OracleSpec(kind, seed=9), space)
        np.testing.assert_array_equal(oracle_eval(a, X), oracle_eval(b, X))
        c = make_oracle(OracleSpec(kind, seed=10), space)
        assert not np.array_equal(oracle_eval(a, X), oracle_eval(c, X))


def test_out_of_bounds_warns_but_evaluates():
    space = _space(2)
    oracle = make_oracle(OracleSpec("moderate_bfl_like", seed=3), space)
    with pytest.warns(UserWarning, match="outside"):
        y = oracle(np.array([[1.5, -0.2]]))
    assert np.isfinite(y).all()


def test_non_finite_output_raises():
    class Broken(SyntheticOracle):
        def _eval_centered(self, c):
            return np.full(c.shape[0], np.nan)

    oracle = Broken(OracleSpec("smooth_mtow_like", seed=0), _space(2))
    with pytest.raises(OracleError):
        oracle(np.array([[0.5, 0.5]]))


def test_smooth_oracle_gradient_bound():
    # central finite differences never exceed the analytic gradient bound
    space = _space(5)
    oracle = make_oracle(OracleSpec("smooth_mtow_like", seed=21), space)
    bound = oracle.gradient_bound()
    rng = np.random.default_rng(4)
    X = rng.uniform(0.05, 0.95, (40, 5))
    eps = 1e-6
    for x in X:
        grad = np.empty(5)
        for j in range(5):
            xp, xm = x.copy(), x.copy()
            xp[j] += eps
            xm[j] -= eps
            grad[j] = (oracle(xp[None])[0] - oracle(xm[None])[0]) / (2 * eps)
        # gradient in unit coordinates equals the raw gradient here (unit box)
        assert np.linalg.norm(grad) <= bound * (1 + 1e-6)


def test_regime_switch_jump_across_boundary():
    # crossing the indicator's zero level shifts the output by roughly the
    # jump size, far more than the smooth base could move over a tiny step
    space = _space(4)
    oracle = make_oracle(OracleSpec("regime_switch_ttc_like", seed=17), space)
    rng = np.random.default_rng(5)
    crossings = 0
    for _ in range(4000):
        a = rng.uniform(0.1, 0.9, 4)
        b = a + rng.normal(0.0, 0.01, 4)
        ca = space.to_unit(a[None]) - 0.5
        cb = space.to_unit(b[None]) - 0.5
        sa = oracle.indicator(ca)[0]
        sb = oracle.indicator(cb)[0]
        if (sa >= 0) != (sb >= 0):
            crossings += 1
            gap = abs(oracle(a[None])[0] - oracle(b[None])[0])
            assert gap > 0.5 * oracle.JUMP
    assert crossings > 20  # the boundary actually threads the domain


def test_regime_switch_has_both_regimes():
    space = _space(6)
    oracle = make_oracle(OracleSpec("regime_switch_ttc_like", seed=2), space)
    X = lhs_sample(space, 500, seed=6)
    s = oracle.indicator(space.to_unit(X) - 0.5)
    frac_high = float((s >= 0).mean())
    assert 0.15 < frac_high < 0.85


def test_moderate_oracle_is_smooth_scale():
    # moderate oracle varies gently: sampled values stay within a few units
    space = _space(3)
    oracle = make_oracle(OracleSpec("moderate_bfl_like", seed=8), space)
    y = oracle(lhs_sample(space, 400, seed=9))
    assert y.std() < 3.0
    assert 25.0 < y.mean() < 35.0


def test_dimension_mismatch_rejected():
    oracle = make_oracle(OracleSpec("smooth_mtow_like", seed=0), _space(3))
    with pytest.raises(ValueError):
        oracle(np.zeros((2, 4)))
