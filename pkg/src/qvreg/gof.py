"""Goodness-of-fit instruments: determination coefficient and parametric test.

The parametric family in v1 is the constant-coefficient model: the fitted
coefficient is the terminal realized regression slope, and the test compares
the parametric residual variation to the nonparametric estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from qvreg import kernels
from qvreg.anova import AnovaReport
from qvreg.errors import DegenerateRegressor, DegenerateTotalSS, LevelOutOfRange
from qvreg.quadvar import quartic_from_increments, realized_cov
from qvreg.series import SamplingGrid


@dataclass(frozen=True)
class RSquaredReport:
    """Determination-coefficient path with its asymptotic mean shift and variance."""

    grid: SamplingGrid
    r2: np.ndarray
    mean_shift: np.ndarray
    variance: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    level: float


def r_squared(xi, report: AnovaReport, level: float = 0.95) -> RSquaredReport:
    """R^2 path 1 - estimate/[Xi,Xi] with its limit mean shift and variance.

    The variance combines the residual and total fourth-order variations:
    (1/[Xi,Xi]^2) [ R^4 * Qz + (1 - R^2)^2 * (Qxi - Qz) ], each Q the
    (2/3) dt_bar^-1 quartic path.
    """
    if not 0.0 < level < 1.0:
        raise LevelOutOfRange(f"level must lie in (0, 1), got {level}")
    grid = report.grid
    xi = np.asarray(xi, dtype=np.float64)
    total = realized_cov(xi, xi, grid).values
    if total[-1] <= 0.0:
        raise DegenerateTotalSS("terminal total variation is zero")
    qz = (2.0 / 3.0) / grid.dt_bar * quartic_from_increments(report.residual.dz, grid).values
    qxi = (2.0 / 3.0) / grid.dt_bar * quartic_from_increments(np.diff(xi), grid).values
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(total > 0.0, 1.0 - report.estimate.values / total, np.nan)
        shift = np.where(total > 0.0, -report.bias.values / total, np.nan)
        var = np.where(
            total > 0.0,
            r2**2 * qz + (1.0 - r2) ** 2 * np.clip(qxi - qz, 0.0, None),
            np.nan,
        ) / np.where(total > 0.0, total**2, np.nan)
    z = norm.ppf(0.5 * (1.0 + level))
    center = r2 - np.sqrt(grid.dt_bar) * shift
    half = z * np.sqrt(grid.dt_bar * np.clip(var, 0.0, None))
    return RSquaredReport(
        grid=grid,
        r2=r2,
        mean_shift=shift,
        variance=var,
        ci_lo=center - half,
        ci_hi=center + half,
        level=level,
    )


@dataclass(frozen=True)
class ParametricFit:
    """Constant-coefficient fit and the model-adequacy test statistic."""

    theta_hat: float
    u_stat: float
    null_mean: float
    null_sd: float
    p_value: float
    gap: float


def fit_constant_beta(xi, s, grid: SamplingGrid) -> float:
    """Global realized regression slope [Xi,S]_T / [S,S]_T."""
    s = np.asarray(s, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    ss = realized_cov(s, s, grid).terminal
    if ss <= 0.0:
        raise DegenerateRegressor("terminal regressor variation is zero")
    return float(realized_cov(xi, s, grid).terminal / ss)


def u_statistic(xi, s, grid: SamplingGrid, theta_hat: float, report: AnovaReport) -> ParametricFit:
    """Adequacy statistic U = dt_bar^{-1/2} ([V^,V^]_T - estimate_T) and its
    estimated null law.

    Under the constant-coefficient null the coefficient path has no
    variation, so of the estimator-family bias only the grid-deformation term
    (1 - 2 alpha) * c * int H' d[V^,V^] survives; the null is centered at
    minus that term, estimated from the parametric residual (using the full
    rolling-estimate bias plug-in here would inject the noise of its
    coefficient-increment integral, which is identically zero under the
    null).  The null variance sums three estimable sources: the
    fitted-parameter influence term (2 eta [V^,S]_T, identically zero when
    theta is the realized regression slope on the same data), the
    higher-order coefficient-estimation fluctuation that dominates in that
    degenerate case, and the sampling noise of the centering term.
    """
    s = np.asarray(s, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    ds = np.diff(s)
    dv = np.diff(xi) - theta_hat * ds
    dt_bar = grid.dt_bar
    vv = float(kernels.kahan_cumsum(dv * dv)[-1])
    u = (vv - report.estimate.terminal) / np.sqrt(dt_bar)

    ss_total = float(kernels.kahan_cumsum(ds * ds)[-1])
    if ss_total <= 0.0:
        raise DegenerateRegressor("terminal regressor variation is zero")
    vs = float(kernels.kahan_cumsum(dv * ds)[-1])
    cross_q = float(kernels.kahan_cumsum((dv * ds) ** 2)[-1])
    s4 = float(kernels.kahan_cumsum(ds**4)[-1])
    eta2 = cross_q / (dt_bar * ss_total**2)

    T = grid.horizon
    h = np.sqrt(dt_bar) / report.c  # window length backing the report
    # parameter-influence term of the limit law (zero for the self-fitted slope)
    var_influence = (2.0 * np.sqrt(eta2) * vs) ** 2
    # higher-order fluctuation from the rolling-coefficient noise
    var_hot = eta2 * (T / h) * ((2.0 / 3.0) * theta_hat**2 * s4 + cross_q)
    # surviving (grid-deformation) bias term under the null, from the
    # parametric residual with per-interval deformation weights dt_i / dt_bar
    w = grid.dt / dt_bar
    d_hat = report.c * float(kernels.kahan_cumsum(w * dv * dv)[-1])
    skew = 1.0 - 2.0 * report.alpha
    # sampling noise of d_hat: unbiased fourth-moment plug-in
    var_d = (2.0 / 3.0) * report.c**2 * float(kernels.kahan_cumsum(w**2 * dv**4)[-1])

    null_sd = float(np.sqrt(var_influence + var_hot + skew**2 * var_d))
    null_mean = -skew * d_hat
    if null_sd == 0.0:
        p_value = 1.0 if u == null_mean else 0.0
    else:
        p_value = float(2.0 * norm.sf(abs(u - null_mean) / null_sd))
    return ParametricFit(
        theta_hat=float(theta_hat),
        u_stat=float(u),
        null_mean=float(null_mean),
        null_sd=null_sd,
        p_value=p_value,
        gap=float(np.sqrt(dt_bar) * u),
    )
