"""Rolling-window spot covariation and the regression-coefficient estimator.

Window convention: the spot value at grid time t uses increments wholly
inside (t - h, t]; increments straddling t - h are excluded.  The estimated
coefficient is held constant on [t_i, t_{i+1}) so that increment i always
pairs with the coefficient value at its left endpoint.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from qvreg import kernels
from qvreg.errors import BandwidthOutOfRange, NoValidWindow
from qvreg.series import SamplingGrid, h_prime_window


@dataclass(frozen=True)
class Bandwidth:
    """Smoothing constant c and window length h, tied by h = sqrt(dt_bar) / c."""

    c: float
    h: float

    @classmethod
    def from_c(cls, grid: SamplingGrid, c: float = 1.0) -> "Bandwidth":
        if c <= 0:
            raise BandwidthOutOfRange(f"smoothing constant must be positive, got {c}")
        return cls(c=c, h=np.sqrt(grid.dt_bar) / c).validate(grid)

    @classmethod
    def from_h(cls, grid: SamplingGrid, h: float) -> "Bandwidth":
        return cls(c=np.sqrt(grid.dt_bar) / h, h=h).validate(grid)

    def validate(self, grid: SamplingGrid) -> "Bandwidth":
        if not (0.0 < self.h <= grid.horizon):
            raise BandwidthOutOfRange(
                f"window length {self.h} outside (0, {grid.horizon}]"
            )
        if self.h < 2.0 * grid.mesh:
            raise BandwidthOutOfRange(
                f"window length {self.h} shorter than twice the mesh {grid.mesh}"
            )
        if self.h < 5.0 * grid.mesh:
            warnings.warn(
                f"window length {self.h} holds fewer than ~5 increments at the mesh",
                stacklevel=3,
            )
        return self


@dataclass(frozen=True)
class SpotSeries:
    """Grid-indexed rolling estimates with a validity marker.

    ``values[:valid_from]`` are backfilled with the first valid value (the
    burn-in prefix where no full window exists).
    """

    grid: SamplingGrid
    values: np.ndarray
    valid_from: int
    fill: str = "backfill"
    floor_hits: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def at_left(self, s) -> np.ndarray:
        """Value held constant between grid points, evaluated at times ``s``."""
        idx = np.searchsorted(self.grid.times, s, side="right") - 1
        return self.values[np.clip(idx, 0, len(self.grid) - 1)]


def _window_bounds(grid: SamplingGrid, h: float) -> np.ndarray:
    """First increment index inside the window ending at each grid time.

    The left boundary carries a relative tolerance so that a window edge
    landing on a grid point (up to float rounding) includes that increment.
    """
    eps = 1e-12 * grid.horizon
    return np.searchsorted(grid.times, grid.times - h - eps, side="left")


def window_sums(terms: np.ndarray, grid: SamplingGrid, h: float) -> np.ndarray:
    """Sum of per-increment ``terms`` over the window (t_i - h, t_i] at every i.

    Differences of a compensated cumulative path, so each window sum carries
    only two rounding errors regardless of window length.
    """
    cum = kernels.kahan_cumsum(np.asarray(terms, dtype=np.float64))
    lo = _window_bounds(grid, h)
    idx = np.arange(len(grid))
    return cum[np.minimum(idx, len(grid) - 1)] - cum[np.minimum(lo, idx)]


def _first_full_window(grid: SamplingGrid, h: float) -> int:
    # smallest index with t_i >= h (and at least one increment ending by t_i)
    i = int(np.searchsorted(grid.times, h - 1e-12 * grid.horizon, side="left"))
    return max(i, 1)


def spot_cov(x, y, grid: SamplingGrid, bw: Bandwidth) -> SpotSeries:
    """Rolling spot covariation: window sum of dX dY divided by h."""
    bw.validate(grid)
    terms = np.diff(np.asarray(x, dtype=np.float64)) * np.diff(
        np.asarray(y, dtype=np.float64)
    )
    vals = window_sums(terms, grid, bw.h) / bw.h
    vfrom = _first_full_window(grid, bw.h)
    vals[:vfrom] = vals[vfrom]
    return SpotSeries(grid=grid, values=vals, valid_from=vfrom)


def default_floor(s, grid: SamplingGrid) -> float:
    ds = np.diff(np.asarray(s, dtype=np.float64))
    return 1e-10 * float(np.sum(ds * ds)) / grid.horizon


def rho_hat(s, xi, grid: SamplingGrid, bw: Bandwidth, floor: float | None = None) -> SpotSeries:
    """Ratio of rolling spot covariations: window [Xi,S] over window [S,S].

    Where the denominator spot value falls below ``floor`` the last valid
    value is carried forward; the burn-in prefix is backfilled with the first
    valid value.
    """
    bw.validate(grid)
    s = np.asarray(s, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    ds = np.diff(s)
    num = window_sums(np.diff(xi) * ds, grid, bw.h)
    den = window_sums(ds * ds, grid, bw.h)
    if floor is None:
        floor = default_floor(s, grid)
    if floor <= 0:
        raise NoValidWindow("floor must be positive")
    vfrom = _first_full_window(grid, bw.h)
    ok = np.zeros(len(grid), dtype=bool)
    ok[vfrom:] = den[vfrom:] / bw.h >= floor
    if not ok.any():
        raise NoValidWindow("spot regressor variance never exceeds the floor")
    vals = np.full(len(grid), np.nan)
    vals[ok] = num[ok] / den[ok]
    # carry forward over floor failures, then backfill the prefix
    first_ok = int(np.argmax(ok))
    for i in range(first_ok + 1, len(vals)):
        if not ok[i]:
            vals[i] = vals[i - 1]
    vals[:first_ok] = vals[first_ok]
    floor_hits = int(np.count_nonzero(~ok[vfrom:]))
    return SpotSeries(
        grid=grid, values=vals, valid_from=max(vfrom, first_ok), floor_hits=floor_hits
    )


def rho_qv_prime(
    s,
    xi,
    grid: SamplingGrid,
    bw: Bandwidth,
    rho: SpotSeries | None = None,
    smooth: bool = True,
) -> SpotSeries:
    """Debiased estimate of the quadratic variation rate of the coefficient path.

    Uses squared lag-h differences of the estimated coefficient at disjoint
    offsets (stride one full window, so consecutive differences share no
    increments).  A window mean of an underlying martingale coefficient moves
    by (2/3)*qv_rate*h in mean square per lag h, and each endpoint carries
    estimation noise with variance c*H'*(spot total/spot regressor -
    rho^2)*sqrt(dt_bar); both are inverted out.  The debiased terms are
    averaged over the path so far *before* clipping at zero -- clipping the
    raw chi-squared-like terms individually would rectify their noise into a
    large spurious positive level.  The price is locality: the profile is an
    expanding average, adequate for the integrated bias plug-in it feeds.
    """
    bw.validate(grid)
    if rho is None:
        rho = rho_hat(s, xi, grid, bw)
    spot_ss = spot_cov(s, s, grid, bw)
    spot_xx = spot_cov(xi, xi, grid, bw)
    gf = h_prime_window(grid, bw.h)
    hp = np.where(gf.valid, gf.h_prime, 1.0)
    noise_var = bw.c * hp * np.clip(
        spot_xx.values / spot_ss.values - rho.values**2, 0.0, None
    ) * np.sqrt(grid.dt_bar)
    lagged = rho.at_left(grid.times - bw.h)
    debiased = (rho.values - lagged) ** 2 - 2.0 * noise_var

    vfrom = int(np.searchsorted(grid.times, 2.0 * bw.h, side="left"))
    vfrom = min(max(vfrom, 1), len(grid) - 1)
    if not smooth:
        vals = np.clip(debiased, 0.0, None) / ((2.0 / 3.0) * bw.h)
        vals[:vfrom] = vals[vfrom]
        return SpotSeries(grid=grid, values=vals, valid_from=vfrom)

    # expanding mean over disjoint-lag sample points, clipped after averaging
    anchors = [vfrom]
    while True:
        nxt = int(np.searchsorted(grid.times, grid.times[anchors[-1]] + bw.h, side="left"))
        if nxt >= len(grid):
            break
        anchors.append(nxt)
    anchors = np.asarray(anchors)
    cum_terms = np.cumsum(debiased[anchors])
    # number of anchors at or before each grid index
    navail = np.searchsorted(anchors, np.arange(len(grid)), side="right")
    navail_c = np.maximum(navail, 1)
    vals = np.clip(cum_terms[navail_c - 1] / navail_c, 0.0, None) / ((2.0 / 3.0) * bw.h)
    vals[:vfrom] = vals[vfrom]
    return SpotSeries(grid=grid, values=vals, valid_from=vfrom)


def rho_variance_profile(
    s,
    xi,
    grid: SamplingGrid,
    bw: Bandwidth,
    rho: SpotSeries | None = None,
    floor: float | None = None,
) -> SpotSeries:
    """Plug-in pointwise variance profile of the coefficient estimator.

    qv_rate(coefficient)/(3c) + c * H' * (spot total / spot regressor - rho^2),
    clipped below at 0.  The first term relies on the debiased qv-rate
    plug-in from :func:`rho_qv_prime`; treat it as indicative.
    """
    if rho is None:
        rho = rho_hat(s, xi, grid, bw, floor=floor)
    spot_ss = spot_cov(s, s, grid, bw)
    spot_xx = spot_cov(xi, xi, grid, bw)
    gf = h_prime_window(grid, bw.h)
    hp = np.where(gf.valid, gf.h_prime, 1.0)
    rr = rho_qv_prime(s, xi, grid, bw, rho=rho)
    vals = rr.values / (3.0 * bw.c) + bw.c * hp * (
        spot_xx.values / spot_ss.values - rho.values**2
    )
    vals = np.clip(vals, 0.0, None)
    vfrom = max(rho.valid_from, spot_ss.valid_from, rr.valid_from)
    return SpotSeries(grid=grid, values=vals, valid_from=vfrom)
