"""Quadratic-variation regression toolkit.

Estimates the residual quadratic variation of a continuous-time regression
dXi = rho dS + dZ from discretely sampled paths, with plug-in bias and
variance paths, pointwise intervals, global confidence bands, a determination
coefficient, a parametric adequacy test, and a Monte Carlo validation harness.
"""

from qvreg.anova import AnovaReport, Band, estimate_anova, exit_quantile, global_band, qv_alpha
from qvreg.errors import QvregError
from qvreg.gof import ParametricFit, RSquaredReport, fit_constant_beta, r_squared, u_statistic
from qvreg.harness import ExperimentPlan, McSummary, mixed_normal_check, rate_regression, run_plan
from qvreg.kernels import BACKEND
from qvreg.quadvar import QvPath, avar_estimate, quartic, realized_cov
from qvreg.series import PathSeries, SamplingGrid, h_curve, previous_tick_align, read_series_csv, validate_grid
from qvreg.sim import ConstantRho, MartingaleRho, StochVol, VasicekBondPair, simulate, subsample
from qvreg.spot import Bandwidth, SpotSeries, rho_hat, spot_cov

__version__ = "0.1.0"

__all__ = [
    "AnovaReport",
    "BACKEND",
    "Band",
    "Bandwidth",
    "ConstantRho",
    "ExperimentPlan",
    "MartingaleRho",
    "McSummary",
    "ParametricFit",
    "PathSeries",
    "QvPath",
    "QvregError",
    "RSquaredReport",
    "SamplingGrid",
    "SpotSeries",
    "StochVol",
    "VasicekBondPair",
    "avar_estimate",
    "estimate_anova",
    "exit_quantile",
    "fit_constant_beta",
    "global_band",
    "h_curve",
    "mixed_normal_check",
    "previous_tick_align",
    "qv_alpha",
    "quartic",
    "r_squared",
    "rate_regression",
    "read_series_csv",
    "realized_cov",
    "rho_hat",
    "run_plan",
    "simulate",
    "spot_cov",
    "subsample",
    "u_statistic",
    "validate_grid",
    "__version__",
]
