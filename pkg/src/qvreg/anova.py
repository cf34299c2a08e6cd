"""Residual quadratic-variation estimators, bias/variance paths, and bands.

The estimator family is indexed by alpha in [0, 1]: a convex combination of
the squared-residual-increment sum (alpha = 0) and the spot-decomposition sum
(alpha = 1).  The midpoint alpha = 1/2 equals the realized covariation of the
response with the cumulated residual, an exact algebraic identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from qvreg import quadvar
from qvreg.errors import (
    AlphaOutOfRange,
    DegenerateTau,
    LengthMismatch,
    LevelOutOfRange,
)
from qvreg.quadvar import QvPath, avar_from_increments
from qvreg.series import PathSeries, SamplingGrid, h_prime_window
from qvreg.spot import Bandwidth, SpotSeries, rho_hat, rho_qv_prime, spot_cov


@dataclass(frozen=True)
class ResidualSeries:
    """Residual increments dXi - rho^ dS and their cumulated path."""

    grid: SamplingGrid
    dz: np.ndarray
    z: np.ndarray


def residuals(xi, s, rho: SpotSeries, grid: SamplingGrid) -> ResidualSeries:
    xi = np.asarray(xi, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if xi.shape != grid.times.shape or s.shape != grid.times.shape:
        raise LengthMismatch("columns must have one entry per grid time")
    dz = np.diff(xi) - rho.values[:-1] * np.diff(s)
    z = np.empty(len(grid))
    z[0] = 0.0
    np.cumsum(dz, out=z[1:])
    return ResidualSeries(grid=grid, dz=dz, z=z)


def qv_alpha(
    res: ResidualSeries, xi, s, rho: SpotSeries, grid: SamplingGrid, alpha: float
) -> QvPath:
    """Estimate path (1-a) sum(dZ^2) + a sum(dXi^2 - rho^2 dS^2)."""
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    dxi = np.diff(np.asarray(xi, dtype=np.float64))
    ds = np.diff(np.asarray(s, dtype=np.float64))
    r = rho.values[:-1]
    terms = (1.0 - alpha) * res.dz**2 + alpha * (dxi**2 - r**2 * ds**2)
    from qvreg import kernels

    return QvPath(grid, kernels.kahan_cumsum(terms))


def bias_alpha(
    s,
    xi,
    rho: SpotSeries,
    grid: SamplingGrid,
    bw: Bandwidth,
    alpha: float,
    dzz: np.ndarray | None = None,
) -> QvPath:
    """Plug-in bias path in the normalized scale of the limit law.

    (a/c) int spot[Xi,S] drho  +  (1 - 2a) * [ qv_rate(rho)/(3c) int d[S,S]
    + c int H' d[Z,Z] ].  The d[Z,Z] increments default to the midpoint
    estimator's increments (least biased under a constant coefficient); the
    coefficient-qv plug-in carries its own caveat (see spot.rho_qv_prime).
    """
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    s = np.asarray(s, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    ds = np.diff(s)
    if dzz is None:
        res = residuals(xi, s, rho, grid)
        dzz = np.diff(qv_alpha(res, xi, s, rho, grid, 0.5).values)
    c = bw.c
    sxis = spot_cov(s, xi, grid, bw)
    drho = np.diff(rho.values)
    # weight each coefficient increment by the spot covariation one full
    # window earlier: the lagged window shares no increments with the windows
    # driving drho, killing the spurious negative weight/increment correlation
    term1 = sxis.at_left(grid.times[:-1] - bw.h) * drho

    gf = h_prime_window(grid, bw.h)
    hp = gf.h_prime.copy()
    hp[~gf.valid] = hp[gf.valid][0]
    rr = rho_qv_prime(s, xi, grid, bw, rho=rho)
    term_d = rr.values[:-1] / (3.0 * c) * ds**2 + c * hp[:-1] * dzz

    from qvreg import kernels

    vals = (alpha / c) * kernels.kahan_cumsum(term1) + (1.0 - 2.0 * alpha) * (
        kernels.kahan_cumsum(term_d)
    )
    return QvPath(grid, vals)


@dataclass(frozen=True)
class Band:
    """Symmetric global confidence band with constant half-width."""

    level: float
    tau_hat: float
    c_tau: float
    lo: np.ndarray
    hi: np.ndarray


def exit_quantile(level: float) -> float:
    """Half-width c such that a standard Brownian path stays in [-c, c] on
    [0, 1] with the given probability.

    Alternating reflection series, truncated when terms fall below 1e-14;
    root-found by bisection-backed Brent.
    """
    if not 0.0 < level < 1.0:
        raise LevelOutOfRange(f"level must lie in (0, 1), got {level}")

    def stay_prob(con: float) -> float:
        total = 2.0 * norm.cdf(con) - 1.0
        k = 1
        while True:
            term = norm.cdf((2 * k + 1) * con) - norm.cdf((2 * k - 1) * con)
            total += 2.0 * (-1) ** k * term
            if term < 1e-14 or k > 200:
                return total
            k += 1

    return float(brentq(lambda con: stay_prob(con) - level, 1e-3, 20.0, xtol=1e-12))


def band_halfwidth(tau_hat: float, level: float) -> tuple[float, float]:
    """(c_tau, half-width before the sqrt(dt_bar) scale) for a given variance."""
    if tau_hat <= 0.0:
        raise DegenerateTau(f"terminal variance estimate must be positive, got {tau_hat}")
    c_tau = np.sqrt(tau_hat) * exit_quantile(level)
    return c_tau, c_tau


def pointwise_ci(
    estimate: QvPath,
    bias: QvPath,
    avar: QvPath,
    level: float,
    bias_correct: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise interval: center +- z * sqrt(dt_bar * avar_t)."""
    if not 0.0 < level < 1.0:
        raise LevelOutOfRange(f"level must lie in (0, 1), got {level}")
    grid = estimate.grid
    z = norm.ppf(0.5 * (1.0 + level))
    center = estimate.values - (np.sqrt(grid.dt_bar) * bias.values if bias_correct else 0.0)
    half = z * np.sqrt(grid.dt_bar * np.clip(avar.values, 0.0, None))
    return center - half, center + half


def global_band(
    estimate: QvPath,
    bias: QvPath,
    avar: QvPath,
    level: float,
    bias_correct: bool = True,
) -> Band:
    """Constant-width band from the two-sided Brownian exit quantile at the
    terminal variance estimate."""
    if not 0.0 < level < 1.0:
        raise LevelOutOfRange(f"level must lie in (0, 1), got {level}")
    grid = estimate.grid
    tau_hat = avar.terminal
    # an exactly-hedgeable input has zero residual variance: the band
    # degenerates to the estimate path itself rather than erroring out
    c_tau = 0.0 if tau_hat <= 0.0 else band_halfwidth(tau_hat, level)[0]
    center = estimate.values - (np.sqrt(grid.dt_bar) * bias.values if bias_correct else 0.0)
    half = np.sqrt(grid.dt_bar) * c_tau
    return Band(level=level, tau_hat=tau_hat, c_tau=float(c_tau), lo=center - half, hi=center + half)


@dataclass(frozen=True)
class AnovaReport:
    """Full estimation output for one (alpha, c, level) choice."""

    grid: SamplingGrid
    alpha: float
    c: float
    level: float
    estimate: QvPath
    bias: QvPath
    avar: QvPath
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    band: Band
    rho: SpotSeries
    residual: ResidualSeries
    r2: np.ndarray
    bias_correct: bool = True
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "c": self.c,
            "level": self.level,
            "estimate_terminal": self.estimate.terminal,
            "bias_terminal_normalized": self.bias.terminal,
            "bias_terminal": float(np.sqrt(self.grid.dt_bar) * self.bias.terminal),
            "avar_terminal": self.avar.terminal,
            "tau_hat": self.band.tau_hat,
            "c_tau": self.band.c_tau,
            "ci_terminal": [float(self.ci_lo[-1]), float(self.ci_hi[-1])],
            "band_terminal": [float(self.band.lo[-1]), float(self.band.hi[-1])],
            "r2_terminal": float(self.r2[-1]),
            "diagnostics": self.diagnostics,
        }


def estimate_anova(
    series: PathSeries,
    s_col: str = "s",
    xi_col: str = "xi",
    c: float = 1.0,
    alpha: float = 0.5,
    level: float = 0.95,
    floor: float | None = None,
    bias_correct: bool = True,
    isotonic: bool = False,
) -> AnovaReport:
    """Run the whole estimation pipeline on an aligned two-column series."""
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    grid = series.grid
    s = series[s_col]
    xi = series[xi_col]
    bw = Bandwidth.from_c(grid, c)
    rho = rho_hat(s, xi, grid, bw, floor=floor)
    res = residuals(xi, s, rho, grid)
    est = qv_alpha(res, xi, s, rho, grid, alpha)
    if isotonic:
        est = QvPath(grid, np.maximum.accumulate(est.values))
    dzz = np.diff(qv_alpha(res, xi, s, rho, grid, 0.5).values)
    bias = bias_alpha(s, xi, rho, grid, bw, alpha, dzz=dzz)
    avar = avar_from_increments(res.dz, grid)
    ci_lo, ci_hi = pointwise_ci(est, bias, avar, level, bias_correct=bias_correct)
    band = global_band(est, bias, avar, level, bias_correct=bias_correct)
    total = quadvar.realized_cov(xi, xi, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(total.values > 0.0, 1.0 - est.values / total.values, np.nan)
    diagnostics = {
        "burn_in_time": bw.h,
        "burn_in_points": int(rho.valid_from),
        "floor_hits": int(rho.floor_hits),
        "bandwidth_h": bw.h,
    }
    return AnovaReport(
        grid=grid,
        alpha=alpha,
        c=c,
        level=level,
        estimate=est,
        bias=bias,
        avar=avar,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        band=band,
        rho=rho,
        residual=res,
        r2=r2,
        bias_correct=bias_correct,
        diagnostics=diagnostics,
    )
