"""Fine-grid simulation of the two-process regression model with ground truth.

Paths follow dXi = rho dS + dZ on a uniform fine grid via the Euler scheme
with left-point coefficients, so realized sums on the fine grid match the
stochastic-integral convention.  Ground-truth integrated quantities are
accumulated from the instantaneous coefficients by left-point Riemann sums.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Union

import numpy as np

from qvreg import kernels
from qvreg.errors import ConfigError, DegenerateModel, GridBeyondHorizon
from qvreg.series import PathSeries, SamplingGrid

MIN_N_FINE = 2**10


@dataclass(frozen=True)
class ConstantRho:
    """Constant regression coefficient, constant volatilities."""

    rho: float
    sigma_s: float
    sigma_z: float

    def __post_init__(self):
        _require(self.sigma_s >= 0 and self.sigma_z >= 0, "volatilities must be >= 0")


@dataclass(frozen=True)
class MartingaleRho:
    """Coefficient follows a driftless Brownian path."""

    rho0: float
    sigma_rho: float
    sigma_s: float
    sigma_z: float

    def __post_init__(self):
        _require(
            self.sigma_rho >= 0 and self.sigma_s >= 0 and self.sigma_z >= 0,
            "volatilities must be >= 0",
        )


@dataclass(frozen=True)
class StochVol:
    """Common stochastic volatility factor exp(OU) scaling both the regressor
    and the residual, with an optionally Brownian coefficient.

    The residual volatility is sigma_z times the factor, so the residual spot
    variance is genuinely random: this is the regime where the estimation
    error is mixed normal rather than plain normal.
    """

    kappa_v: float
    theta_v: float
    xi_v: float
    rho0: float
    sigma_rho: float
    sigma_z: float

    def __post_init__(self):
        _require(self.kappa_v > 0, "volatility mean reversion must be > 0")
        _require(self.theta_v > 0, "volatility level must be > 0")
        _require(
            self.xi_v >= 0 and self.sigma_rho >= 0 and self.sigma_z >= 0,
            "volatilities must be >= 0",
        )


@dataclass(frozen=True)
class VasicekBondPair:
    """Two zero-coupon bond prices driven by one mean-reverting short rate.

    Both prices are closed-form functions of (r, t), so the residual
    quadratic variation is identically zero: the exactly-hedgeable case.
    """

    kappa: float
    alpha: float
    gamma: float
    t1: float
    t2: float
    r0: float

    def __post_init__(self):
        _require(self.kappa > 0, "mean reversion must be > 0")
        _require(self.gamma >= 0, "rate volatility must be >= 0")
        _require(self.t1 < self.t2, "need maturity t1 < t2")


SimModel = Union[ConstantRho, MartingaleRho, StochVol, VasicekBondPair]

_VARIANTS = {
    "ConstantRho": ConstantRho,
    "MartingaleRho": MartingaleRho,
    "StochVol": StochVol,
    "VasicekBondPair": VasicekBondPair,
}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def model_to_dict(model: SimModel) -> dict:
    d = {"variant": type(model).__name__}
    d.update(asdict(model))
    return d


def model_from_dict(d: dict) -> SimModel:
    d = dict(d)
    try:
        variant = d.pop("variant")
    except KeyError:
        raise ConfigError("model config missing 'variant'") from None
    if variant not in _VARIANTS:
        raise ConfigError(
            f"unknown model variant {variant!r}; valid: {sorted(_VARIANTS)}"
        )
    try:
        return _VARIANTS[variant](**d)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {variant}: {exc}") from None


@dataclass(frozen=True)
class FinePath:
    """Simulated fine-grid paths plus ground-truth integrated quantities.

    ``zz_prime`` is the instantaneous residual variance (spot qv rate of Z);
    truth paths are cumulative, one value per fine time.
    """

    times: np.ndarray
    s: np.ndarray
    xi: np.ndarray
    z: np.ndarray
    rho: np.ndarray
    zz_prime: np.ndarray
    true_qv_z: np.ndarray
    true_qv_s: np.ndarray
    true_cov_xis: np.ndarray
    true_int_rho2_dss: np.ndarray

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_fine(self) -> int:
        return self.times.size - 1

    def tau_true(self, grid: SamplingGrid) -> float:
        """Ground-truth terminal variance 2 * int H' (zz')^2 for an observation grid.

        H' is a property of the grid (per-interval value dt_i / dt_bar); the
        residual spot variance comes from the fine path.
        """
        zz = np.interp(grid.times[:-1], self.times, self.zz_prime)
        dt = grid.dt
        return float(2.0 * np.sum(dt**2 / grid.dt_bar * zz**2))


def _streams(seed) -> list[np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(4)]


def simulate(model: SimModel, horizon: float, n_fine: int, seed) -> FinePath:
    """Simulate the model on a uniform fine grid of ``n_fine`` intervals.

    Deterministic given (model, horizon, n_fine, seed); each driving factor
    draws from its own counter-based stream, so replications can run
    concurrently with no shared state.
    """
    if horizon <= 0:
        raise ConfigError("horizon must be positive")
    if n_fine < MIN_N_FINE:
        raise ConfigError(f"n_fine must be at least {MIN_N_FINE}")
    gen_s, gen_z, gen_rho, gen_v = _streams(seed)
    dt = horizon / n_fine
    sqdt = np.sqrt(dt)
    times = np.linspace(0.0, horizon, n_fine + 1)

    if isinstance(model, (ConstantRho, MartingaleRho)):
        if model.sigma_s == 0.0 and model.sigma_z == 0.0:
            raise DegenerateModel("all volatilities are zero")
        ds = model.sigma_s * sqdt * gen_s.standard_normal(n_fine)
        dz = model.sigma_z * sqdt * gen_z.standard_normal(n_fine)
        if isinstance(model, ConstantRho):
            rho = np.full(n_fine + 1, float(model.rho))
        else:
            rho = model.rho0 + model.sigma_rho * _bm(gen_rho, n_fine, sqdt)
        zz_prime = np.full(n_fine + 1, model.sigma_z**2)
        ss_prime = np.full(n_fine, model.sigma_s**2)
        xis_prime = rho[:-1] * ss_prime
    elif isinstance(model, StochVol):
        if model.xi_v == 0.0 and model.sigma_z == 0.0:
            raise DegenerateModel("volatility factor and residual are both degenerate")
        eps_v = gen_v.standard_normal(n_fine)
        x0 = np.log(model.theta_v)
        drift = model.kappa_v * x0 * dt + model.xi_v * sqdt * eps_v
        logv = kernels.ar1_recursion(1.0 - model.kappa_v * dt, drift, x0)
        v = np.exp(logv)
        rho = model.rho0 + model.sigma_rho * _bm(gen_rho, n_fine, sqdt)
        ds = v[:-1] * sqdt * gen_s.standard_normal(n_fine)
        dz = model.sigma_z * v[:-1] * sqdt * gen_z.standard_normal(n_fine)
        zz_prime = model.sigma_z**2 * v**2
        ss_prime = v[:-1] ** 2
        xis_prime = rho[:-1] * ss_prime
    elif isinstance(model, VasicekBondPair):
        if model.t1 <= horizon:
            raise ConfigError("shorter maturity must exceed the simulation horizon")
        if model.gamma == 0.0:
            raise DegenerateModel("rate volatility is zero")
        shocks = model.kappa * model.alpha * dt + model.gamma * sqdt * gen_s.standard_normal(
            n_fine
        )
        r = kernels.ar1_recursion(1.0 - model.kappa * dt, shocks, model.r0)
        s_path, b1 = _vasicek_price(model, r, times, model.t1)
        xi_path, b2 = _vasicek_price(model, r, times, model.t2)
        rho = (b2 * xi_path) / (b1 * s_path)
        ds = np.diff(s_path)
        # residual carries drift only; its martingale part cancels exactly
        z = np.empty(n_fine + 1)
        z[0] = 0.0
        z[1:] = np.cumsum(np.diff(xi_path) - rho[:-1] * ds)
        zz_prime = np.zeros(n_fine + 1)
        ss_prime = (b1[:-1] * s_path[:-1] * model.gamma) ** 2
        xis_prime = b1[:-1] * b2[:-1] * s_path[:-1] * xi_path[:-1] * model.gamma**2
        return FinePath(
            times=times,
            s=s_path,
            xi=xi_path,
            z=z,
            rho=rho,
            zz_prime=zz_prime,
            true_qv_z=np.zeros(n_fine + 1),
            true_qv_s=_cum(ss_prime * dt),
            true_cov_xis=_cum(xis_prime * dt),
            true_int_rho2_dss=_cum(rho[:-1] ** 2 * ss_prime * dt),
        )
    else:
        raise ConfigError(f"unsupported model type {type(model).__name__}")

    dxi = rho[:-1] * ds + dz
    s_path = _cum(ds)
    xi_path = _cum(dxi)
    z_path = _cum(dz)
    return FinePath(
        times=times,
        s=s_path,
        xi=xi_path,
        z=z_path,
        rho=rho,
        zz_prime=zz_prime,
        true_qv_z=_cum(zz_prime[:-1] * dt),
        true_qv_s=_cum(ss_prime * dt),
        true_cov_xis=_cum(xis_prime * dt),
        true_int_rho2_dss=_cum(rho[:-1] ** 2 * ss_prime * dt),
    )


def _bm(gen: np.random.Generator, n: int, sqdt: float) -> np.ndarray:
    out = np.empty(n + 1)
    out[0] = 0.0
    np.cumsum(sqdt * gen.standard_normal(n), out=out[1:])
    return out


def _cum(terms: np.ndarray) -> np.ndarray:
    out = np.empty(terms.size + 1)
    out[0] = 0.0
    np.cumsum(terms, out=out[1:])
    return out


def _vasicek_price(model: VasicekBondPair, r, t, maturity):
    """Closed-form zero-coupon price exp(ln A - B r) and the factor B."""
    tau = maturity - t
    b = (1.0 - np.exp(-model.kappa * tau)) / model.kappa
    ln_a = (b - tau) * (model.kappa**2 * model.alpha - model.gamma**2 / 2.0) / model.kappa**2
    ln_a -= model.gamma**2 * b**2 / (4.0 * model.kappa)
    return np.exp(ln_a - b * r), b


def snap_indices(fine: FinePath, grid: SamplingGrid) -> np.ndarray:
    """Nearest fine-grid index for every observation time."""
    dt_fine = fine.horizon / fine.n_fine
    if grid.horizon > fine.horizon + 0.5 * dt_fine:
        raise GridBeyondHorizon(
            f"grid horizon {grid.horizon} exceeds simulated horizon {fine.horizon}"
        )
    idx = np.rint(grid.times / dt_fine).astype(np.int64)
    idx = np.clip(idx, 0, fine.n_fine)
    if np.any(np.diff(idx) <= 0):
        raise GridBeyondHorizon("observation grid finer than the simulation grid")
    return idx


def subsample(fine: FinePath, grid: SamplingGrid) -> PathSeries:
    """Observation-grid values of the two observable columns only.

    Each grid time snaps to the nearest fine time (error at most half a fine
    step); the returned series uses the snapped times.
    """
    idx = snap_indices(fine, grid)
    dt_fine = fine.horizon / fine.n_fine
    snapped = SamplingGrid(idx * dt_fine)
    return PathSeries(grid=snapped, columns={"s": fine.s[idx], "xi": fine.xi[idx]})


def subsample_truth(fine: FinePath, grid: SamplingGrid) -> dict:
    """Ground-truth quantities aligned to the snapped observation grid.

    For validation only; estimators never see these.
    """
    idx = snap_indices(fine, grid)
    dt_fine = fine.horizon / fine.n_fine
    snapped = SamplingGrid(idx * dt_fine)
    return {
        "grid": snapped,
        "z": fine.z[idx],
        "rho": fine.rho[idx],
        "qv_z": fine.true_qv_z[idx],
        "qv_s": fine.true_qv_s[idx],
        "int_rho2_dss": fine.true_int_rho2_dss[idx],
        "tau": fine.tau_true(snapped),
        "max_snap_error": float(np.max(np.abs(idx * dt_fine - grid.times))),
    }
