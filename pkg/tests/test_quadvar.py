"""Realized variation paths: worked examples, algebraic properties, step semantics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvreg.errors import LengthMismatch
from qvreg.quadvar import QvPath, avar_estimate, quartic, realized_cov
from qvreg.series import validate_grid


@pytest.fixture
def grid3():
    return validate_grid([0.0, 1.0, 2.0])


def test_worked_example_qv(grid3):
    # increments 3, -2 -> squared 9, 4 -> cumulative 0, 9, 13
    path = realized_cov([0.0, 3.0, 1.0], [0.0, 3.0, 1.0], grid3)
    np.testing.assert_allclose(path.values, [0.0, 9.0, 13.0])
    assert path.terminal == 13.0


def test_worked_example_cov(grid3):
    # dX = (3, -2), dY = (1, 4) -> products 3, -8 -> cumulative 0, 3, -5
    path = realized_cov([0.0, 3.0, 1.0], [0.0, 1.0, 5.0], grid3)
    np.testing.assert_allclose(path.values, [0.0, 3.0, -5.0])


def test_worked_example_quartic():
    grid = validate_grid([0.0, 1.0, 2.0, 3.0])
    # increments 1, 1, 4 -> fourth powers 1, 1, 256
    path = quartic([0.0, 1.0, 2.0, 6.0], grid)
    np.testing.assert_allclose(path.values, [0.0, 1.0, 2.0, 258.0])


def _random_paths(n, seed):
    rng = np.random.default_rng(seed)
    grid = validate_grid(np.concatenate([[0.0], np.cumsum(rng.uniform(0.1, 1.0, n))]))
    return grid, rng.standard_normal(n + 1), rng.standard_normal(n + 1), rng.standard_normal(n + 1)


@settings(deadline=None, max_examples=40)
@given(st.integers(1, 40), st.integers(0, 10_000))
def test_bilinearity(n, seed):
    grid, x, y, w = _random_paths(n, seed)
    lhs = realized_cov(2.5 * x - 1.5 * y, w, grid).values
    rhs = 2.5 * realized_cov(x, w, grid).values - 1.5 * realized_cov(y, w, grid).values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


@settings(deadline=None, max_examples=40)
@given(st.integers(1, 40), st.integers(0, 10_000))
def test_polarization(n, seed):
    grid, x, y, _ = _random_paths(n, seed)
    lhs = realized_cov(x, y, grid).values
    rhs = 0.25 * (
        realized_cov(x + y, x + y, grid).values - realized_cov(x - y, x - y, grid).values
    )
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


@settings(deadline=None, max_examples=40)
@given(st.integers(1, 40), st.integers(0, 10_000))
def test_cauchy_schwarz(n, seed):
    grid, x, y, _ = _random_paths(n, seed)
    cov = realized_cov(x, y, grid).terminal
    assert cov**2 <= realized_cov(x, x, grid).terminal * realized_cov(y, y, grid).terminal * (
        1 + 1e-12
    )


def test_qv_nonnegative_and_monotone():
    grid, x, _, _ = _random_paths(200, 42)
    vals = realized_cov(x, x, grid).values
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) >= 0)


def test_step_evaluation(grid3):
    path = QvPath(grid3, np.array([0.0, 9.0, 13.0]))
    # cadlag step: holds its value between grid times, jumps at the right endpoint
    np.testing.assert_array_equal(path.at([0.0, 0.5, 1.0, 1.5, 2.0, 5.0]),
                                  [0.0, 0.0, 9.0, 9.0, 13.0, 13.0])
    np.testing.assert_array_equal(path.at([-1.0]), [0.0])


def test_avar_scaling():
    grid = validate_grid(np.linspace(0, 1, 101))
    rng = np.random.default_rng(1)
    z = np.concatenate([[0.0], np.cumsum(0.1 * rng.standard_normal(100))])
    a = avar_estimate(z, grid)
    q = quartic(z, grid)
    np.testing.assert_allclose(a.values, (2.0 / 3.0) / grid.dt_bar * q.values, rtol=1e-13)


def test_length_mismatch(grid3):
    with pytest.raises(LengthMismatch):
        realized_cov([0.0, 1.0], [0.0, 1.0, 2.0], grid3)
    with pytest.raises(LengthMismatch):
        QvPath(grid3, np.zeros(5))
