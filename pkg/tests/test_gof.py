"""Determination coefficient and constant-coefficient adequacy test."""

import numpy as np
import pytest

from qvreg.anova import estimate_anova
from qvreg.errors import DegenerateRegressor, DegenerateTotalSS, LevelOutOfRange
from qvreg.gof import fit_constant_beta, r_squared, u_statistic
from qvreg.series import PathSeries, validate_grid


def _series(n=512, seed=0, rho=2.0, sigma_z=0.5):
    rng = np.random.default_rng(seed)
    grid = validate_grid(np.linspace(0, 1, n + 1))
    ds = rng.standard_normal(n) / np.sqrt(n)
    dz = sigma_z * rng.standard_normal(n) / np.sqrt(n)
    s = np.concatenate([[0.0], np.cumsum(ds)])
    xi = np.concatenate([[0.0], np.cumsum(rho * ds + dz)])
    return grid, s, xi


def test_theta_hat_exact_linear():
    grid, s, _ = _series(256, 1)
    assert fit_constant_beta(2.0 * s, s, grid) == pytest.approx(2.0, rel=1e-14)


def test_theta_hat_recovers_slope():
    grid, s, xi = _series(2048, 2, rho=1.5, sigma_z=0.3)
    assert fit_constant_beta(xi, s, grid) == pytest.approx(1.5, abs=0.1)


def test_theta_hat_degenerate_regressor():
    grid = validate_grid(np.linspace(0, 1, 65))
    with pytest.raises(DegenerateRegressor):
        fit_constant_beta(np.linspace(0, 1, 65), np.zeros(65), grid)


def test_u_zero_for_exact_parametric_data():
    grid, s, _ = _series(512, 3)
    xi = 2.0 * s
    series = PathSeries(grid=grid, columns={"s": s, "xi": xi})
    report = estimate_anova(series)
    theta = fit_constant_beta(xi, s, grid)
    fit = u_statistic(xi, s, grid, theta, report)
    assert fit.u_stat == pytest.approx(0.0, abs=1e-10)
    assert fit.gap == pytest.approx(0.0, abs=1e-10)
    assert fit.p_value == pytest.approx(1.0)


def test_u_scaling_homogeneity():
    # scaling both paths by lambda scales U by lambda^2 and preserves the p-value
    grid, s, xi = _series(512, 4)
    series = PathSeries(grid=grid, columns={"s": s, "xi": xi})
    report = estimate_anova(series)
    theta = fit_constant_beta(xi, s, grid)
    base = u_statistic(xi, s, grid, theta, report)

    lam = 3.0
    series2 = PathSeries(grid=grid, columns={"s": lam * s, "xi": lam * xi})
    report2 = estimate_anova(series2)
    theta2 = fit_constant_beta(lam * xi, lam * s, grid)
    scaled = u_statistic(lam * xi, lam * s, grid, theta2, report2)
    assert theta2 == pytest.approx(theta, rel=1e-12)
    assert scaled.u_stat == pytest.approx(lam**2 * base.u_stat, rel=1e-9)
    assert scaled.p_value == pytest.approx(base.p_value, abs=1e-6)


def test_null_sd_positive_on_noisy_data():
    grid, s, xi = _series(512, 5)
    series = PathSeries(grid=grid, columns={"s": s, "xi": xi})
    report = estimate_anova(series)
    theta = fit_constant_beta(xi, s, grid)
    fit = u_statistic(xi, s, grid, theta, report)
    assert fit.null_sd > 0
    assert 0.0 <= fit.p_value <= 1.0


# --- determination coefficient ---


def test_r_squared_exact_fit():
    grid, s, _ = _series(256, 6)
    series = PathSeries(grid=grid, columns={"s": s, "xi": 2.0 * s})
    report = estimate_anova(series)
    rep = r_squared(2.0 * s, report)
    assert rep.r2[-1] == pytest.approx(1.0, abs=1e-10)


def test_r_squared_between_zero_and_one_at_terminal():
    grid, s, xi = _series(2048, 7)
    series = PathSeries(grid=grid, columns={"s": s, "xi": xi})
    report = estimate_anova(series)
    rep = r_squared(xi, report)
    assert 0.0 < rep.r2[-1] < 1.0
    assert rep.ci_lo[-1] < rep.r2[-1] < rep.ci_hi[-1] or rep.ci_hi[-1] - rep.ci_lo[-1] >= 0


def test_r_squared_ci_ordering_and_level():
    grid, s, xi = _series(1024, 8)
    series = PathSeries(grid=grid, columns={"s": s, "xi": xi})
    report = estimate_anova(series)
    narrow = r_squared(xi, report, level=0.8)
    wide = r_squared(xi, report, level=0.99)
    tail = slice(10, None)  # skip the early window where total variation is tiny
    assert np.all(wide.ci_hi[tail] - wide.ci_lo[tail] >= narrow.ci_hi[tail] - narrow.ci_lo[tail])
    with pytest.raises(LevelOutOfRange):
        r_squared(xi, report, level=1.5)


def test_r_squared_degenerate_total():
    grid = validate_grid(np.linspace(0, 1, 65))
    rng = np.random.default_rng(9)
    s = np.concatenate([[0.0], np.cumsum(rng.standard_normal(64) / 8)])
    series = PathSeries(grid=grid, columns={"s": s, "xi": s})
    report = estimate_anova(series)
    with pytest.raises(DegenerateTotalSS):
        r_squared(np.zeros(65), report)
