"""Realized second- and fourth-order variation paths.

All sums use compensated accumulation (see ``qvreg.kernels``): covariation
terms cancel heavily and grids run to 2**20 increments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qvreg import kernels
from qvreg.errors import LengthMismatch
from qvreg.series import SamplingGrid


@dataclass(frozen=True)
class QvPath:
    """Cumulative step-function path of a realized (co)variation.

    ``values[j]`` is the sum over increments with right endpoint <= t_j;
    ``values[0] == 0``.  Cadlag step convention: the path holds its value
    between grid times.
    """

    grid: SamplingGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.times.shape:
            raise LengthMismatch("QvPath values must have one entry per grid time")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    def at(self, s) -> np.ndarray:
        """Evaluate the step path at arbitrary times (value at last grid time <= s)."""
        idx = np.searchsorted(self.grid.times, s, side="right") - 1
        return self.values[np.clip(idx, 0, len(self.grid) - 1)]


def _increments(x, grid: SamplingGrid) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != grid.times.shape:
        raise LengthMismatch(f"column has {x.size} entries, grid has {len(grid)}")
    return np.diff(x)


def realized_cov(x, y, grid: SamplingGrid) -> QvPath:
    """Realized covariation path: cumulative sums of dX_i * dY_i."""
    terms = _increments(x, grid) * _increments(y, grid)
    return QvPath(grid, kernels.kahan_cumsum(terms))


def realized_cov_from_increments(dx: np.ndarray, dy: np.ndarray, grid: SamplingGrid) -> QvPath:
    if dx.size != grid.k or dy.size != grid.k:
        raise LengthMismatch("increment arrays must have one entry per interval")
    return QvPath(grid, kernels.kahan_cumsum(np.asarray(dx) * np.asarray(dy)))


def quartic(x, grid: SamplingGrid) -> QvPath:
    """Realized fourth-order variation path: cumulative sums of (dX_i)**4."""
    dx = _increments(x, grid)
    return QvPath(grid, kernels.kahan_cumsum(dx**4))


def quartic_from_increments(dx: np.ndarray, grid: SamplingGrid) -> QvPath:
    if dx.size != grid.k:
        raise LengthMismatch("increment array must have one entry per interval")
    return QvPath(grid, kernels.kahan_cumsum(np.asarray(dx) ** 4))


def avar_estimate(zhat, grid: SamplingGrid) -> QvPath:
    """Asymptotic-variance path (2/3) * dt_bar**-1 * [Z^, Z^, Z^, Z^]_t.

    ``zhat`` is the cumulated residual column.  Estimates the time-deformed
    integral of twice the squared residual spot variance that drives the
    width of all intervals and bands.
    """
    q = quartic(zhat, grid)
    return QvPath(grid, (2.0 / 3.0) / grid.dt_bar * q.values)


def avar_from_increments(dz: np.ndarray, grid: SamplingGrid) -> QvPath:
    q = quartic_from_increments(dz, grid)
    return QvPath(grid, (2.0 / 3.0) / grid.dt_bar * q.values)
