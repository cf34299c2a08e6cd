"""Sampling grids, their asymptotic functionals, and aligned path containers.

A grid is a strictly increasing set of observation times starting at 0.  The
"quadratic variation of time" curve sum((dt_i)^2) / dt_bar and its windowed
derivative control how irregular spacing enters every asymptotic formula
downstream, so they live here next to the grid itself.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from qvreg.errors import (
    BandwidthOutOfRange,
    FirstTimeNonzero,
    FormatError,
    LengthMismatch,
    NoOverlap,
    NonFiniteTime,
    NonMonotoneTime,
    TooFewPoints,
)

DEFAULT_MESH_RATIO_CAP = 50.0


@dataclass(frozen=True)
class SamplingGrid:
    """Strictly increasing observation times t_0 = 0 < ... < t_k = T."""

    times: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=np.float64))
        self.times.flags.writeable = False

    @property
    def k(self) -> int:
        """Number of sampling intervals."""
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def mesh(self) -> float:
        return float(np.max(self.dt))

    @property
    def dt_bar(self) -> float:
        return self.horizon / self.k

    @property
    def mesh_ratio(self) -> float:
        return self.mesh / self.dt_bar

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class PathSeries:
    """Named real-valued columns, one value per grid time."""

    grid: SamplingGrid
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        cols = {}
        for name, vals in self.columns.items():
            vals = np.asarray(vals, dtype=np.float64)
            if vals.shape != self.grid.times.shape:
                raise LengthMismatch(
                    f"column {name!r} has {vals.size} entries, grid has {len(self.grid)}"
                )
            if not np.all(np.isfinite(vals)):
                raise NonFiniteTime(f"column {name!r} contains non-finite values")
            vals.flags.writeable = False
            cols[name] = vals
        object.__setattr__(self, "columns", cols)

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise FormatError(f"missing column {name!r}")
        return self.columns[name]

    def names(self) -> list[str]:
        return list(self.columns)


@dataclass(frozen=True)
class GridFunctionals:
    """Grid time-deformation curve and its windowed derivative estimate."""

    h_curve: np.ndarray
    h_prime: np.ndarray
    valid: np.ndarray
    dt_bar: float
    mesh: float


def validate_grid(times, mesh_ratio_cap: float = DEFAULT_MESH_RATIO_CAP) -> SamplingGrid:
    """Check grid invariants and return a :class:`SamplingGrid`.

    A mesh/mean-spacing ratio above ``mesh_ratio_cap`` only warns: it signals
    a grid too lopsided for the asymptotic approximations, not invalid data.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise TooFewPoints("need a nonempty 1-d list of times")
    if not np.all(np.isfinite(times)):
        raise NonFiniteTime("times contain NaN or Inf")
    if times.size < 2:
        raise TooFewPoints(f"need at least 2 time points, got {times.size}")
    if times[0] != 0.0:
        raise FirstTimeNonzero(f"first time must be 0, got {times[0]}")
    if np.any(np.diff(times) <= 0):
        raise NonMonotoneTime("times must be strictly increasing")
    grid = SamplingGrid(times)
    if grid.mesh_ratio > mesh_ratio_cap:
        warnings.warn(
            f"mesh/mean-spacing ratio {grid.mesh_ratio:.1f} exceeds cap {mesh_ratio_cap}",
            stacklevel=2,
        )
    return grid


def h_curve(grid: SamplingGrid) -> np.ndarray:
    """Time-deformation curve sum_{t_{i+1} <= t_j} (dt_i)^2 / dt_bar at grid times."""
    out = np.empty(len(grid))
    out[0] = 0.0
    np.cumsum(grid.dt**2 / grid.dt_bar, out=out[1:])
    return out


def _h_at(grid: SamplingGrid, curve: np.ndarray, s: np.ndarray) -> np.ndarray:
    # Linear interpolation between grid values; makes uniform grids give an
    # exactly flat windowed derivative for any bandwidth.
    return np.interp(s, grid.times, curve)


def h_prime_window(grid: SamplingGrid, h: float) -> GridFunctionals:
    """Windowed derivative [H(t_j) - H(max(t_j - h, 0))] / min(h, t_j).

    Flagged invalid at t_0 where the window is empty.
    """
    T = grid.horizon
    if not (0.0 < h <= T):
        raise BandwidthOutOfRange(f"bandwidth {h} outside (0, {T}]")
    curve = h_curve(grid)
    t = grid.times
    hp = np.empty_like(curve)
    hp[0] = np.nan
    lo = np.maximum(t[1:] - h, 0.0)
    width = np.minimum(h, t[1:])
    hp[1:] = (curve[1:] - _h_at(grid, curve, lo)) / width
    valid = np.ones(len(grid), dtype=bool)
    valid[0] = False
    return GridFunctionals(
        h_curve=curve, h_prime=hp, valid=valid, dt_bar=grid.dt_bar, mesh=grid.mesh
    )


def previous_tick_align(
    raw_a: tuple[np.ndarray, np.ndarray],
    raw_b: tuple[np.ndarray, np.ndarray],
    names: tuple[str, str] = ("s", "xi"),
) -> PathSeries:
    """Align two asynchronous series on their union grid by carrying the last
    observation forward, re-based so the first common time is 0.
    """
    out_cols = {}
    times_a, _ = _check_raw(raw_a, names[0])
    times_b, _ = _check_raw(raw_b, names[1])
    start = max(times_a[0], times_b[0])
    stop = min(times_a[-1], times_b[-1])
    if start > stop:
        raise NoOverlap("series time ranges do not intersect")
    union = np.union1d(times_a, times_b)
    union = union[(union >= start) & (union <= stop)]
    if union.size < 2:
        raise NoOverlap("fewer than 2 common observation times after alignment")
    for (times, values), name in zip((raw_a, raw_b), names):
        idx = np.searchsorted(times, union, side="right") - 1
        out_cols[name] = np.asarray(values, dtype=np.float64)[idx]
    grid = validate_grid(union - start)
    return PathSeries(grid=grid, columns=out_cols)


def _check_raw(raw, name):
    times = np.asarray(raw[0], dtype=np.float64)
    values = np.asarray(raw[1], dtype=np.float64)
    if times.size != values.size:
        raise LengthMismatch(f"series {name!r}: {times.size} times vs {values.size} values")
    if times.size == 0:
        raise TooFewPoints(f"series {name!r} is empty")
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
        raise NonFiniteTime(f"series {name!r} contains non-finite entries")
    if np.any(np.diff(times) <= 0):
        raise NonMonotoneTime(f"series {name!r} times must be strictly increasing")
    return times, values


# --- CSV interfaces ---


def read_series_csv(path_or_buf) -> PathSeries:
    """Read ``time,<name1>,<name2>,...`` CSV into a PathSeries."""
    close = False
    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        fh = open(path_or_buf, newline="")
        close = True
    else:
        fh = path_or_buf
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV") from None
        if not header or header[0] != "time":
            raise FormatError("first CSV column must be 'time'")
        names = header[1:]
        if not names:
            raise FormatError("CSV has no data columns")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"line {lineno}: expected {len(header)} fields")
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
        if not rows:
            raise FormatError("CSV has no data rows")
        data = np.asarray(rows)
        if not np.all(np.isfinite(data)):
            raise FormatError("CSV contains NaN or Inf")
        grid = validate_grid(data[:, 0])
        return PathSeries(grid=grid, columns={n: data[:, j + 1] for j, n in enumerate(names)})
    finally:
        if close:
            fh.close()


def read_async_pair(path_s, path_xi, names: tuple[str, str] = ("s", "xi")) -> PathSeries:
    """Ingest two single-series CSVs (``time,value``) and previous-tick align them."""
    raws = []
    for p in (path_s, path_xi):
        ps = read_series_csv(p)
        if ps.names() != ["value"]:
            raise FormatError(f"{p}: expected header 'time,value'")
        raws.append((ps.grid.times, ps["value"]))
    return previous_tick_align(raws[0], raws[1], names=names)


def write_series_csv(series: PathSeries, buf: io.TextIOBase) -> None:
    names = series.names()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time"] + names)
    cols = [series.grid.times] + [series[n] for n in names]
    for row in zip(*cols):
        writer.writerow([repr(float(x)) for x in row])
