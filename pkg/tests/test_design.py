"""Design-space geometry and Latin hypercube stratification."""

import numpy as np
import pytest

from surroguard.design import DesignSpace, lhs_sample


def test_cube_properties():
    space = DesignSpace.cube(4, -2.0, 3.0)
    assert space.dim == 4
    np.testing.assert_allclose(space.widths, 5.0)


def test_bounds_validation():
    with pytest.raises(ValueError):
        DesignSpace(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        DesignSpace(np.array([0.0, np.inf]), np.array([1.0, 2.0]))


def test_unit_round_trip():
    rng = np.random.default_rng(3)
    space = DesignSpace(rng.uniform(-5, 0, 6), rng.uniform(1, 5, 6))
    X = rng.uniform(-5, 5, (50, 6))
    np.testing.assert_allclose(space.from_unit(space.to_unit(X)), X,
                               rtol=1e-12, atol=1e-12)


def test_contains_is_inclusive():
    space = DesignSpace.cube(2, 0.0, 1.0)
    assert space.contains(np.array([[0.0, 1.0]]))[0]
    assert not space.contains(np.array([[0.0, 1.0 + 1e-12]]))[0]


def test_sub_box():
    space = DesignSpace.cube(3, 10.0, 20.0)
    sub = space.sub_box(0.1, 0.5)
    np.testing.assert_allclose(sub.lower, 11.0)
    np.testing.assert_allclose(sub.upper, 15.0)
    with pytest.raises(ValueError):
        space.sub_box(0.6, 0.4)


def test_lhs_one_point_per_stratum():
    # exact stratification: for every dimension, each of the n equal bins
    # holds exactly one sample
    space = DesignSpace.cube(5, 0.0, 1.0)
    for n in (3, 17, 64, 211):
        X = lhs_sample(space, n, seed=n)
        bins = np.floor(X * n).astype(int)
        bins = np.clip(bins, 0, n - 1)
        for j in range(space.dim):
            assert sorted(bins[:, j]) == list(range(n))


def test_lhs_respects_bounds_and_seed():
    space = DesignSpace(np.array([-1.0, 5.0]), np.array([2.0, 9.0]))
    a = lhs_sample(space, 40, seed=7)
    b = lhs_sample(space, 40, seed=7)
    c = lhs_sample(space, 40, seed=8)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert space.contains(a).all()


def test_lhs_rejects_bad_n():
    space = DesignSpace.cube(2)
    with pytest.raises(ValueError):
        lhs_sample(space, 0, seed=0)
