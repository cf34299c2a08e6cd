"""Monte Carlo validation engine tying the simulator to the estimators.

Runs replicated simulate -> subsample -> estimate pipelines over a plan of
(n, c, alpha) cells and aggregates normalized errors, coverage rates,
convergence slopes and normality diagnostics -- the empirical counterpart of
the asymptotic predictions the estimators are built on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from qvreg.anova import estimate_anova
from qvreg.errors import InsufficientCells, InsufficientReplications, PlanError
from qvreg.gof import fit_constant_beta, r_squared, u_statistic
from qvreg.quadvar import realized_cov
from qvreg.series import SamplingGrid, validate_grid
from qvreg.sim import SimModel, model_from_dict, model_to_dict, simulate, subsample, subsample_truth

MIN_N = 2**6


@dataclass(frozen=True)
class ExperimentPlan:
    """A grid of Monte Carlo cells over one data-generating model."""

    model: SimModel
    n_list: list[int]
    replications: int
    seed_base: int
    c_list: list[float] = field(default_factory=lambda: [1.0])
    alpha_list: list[float] = field(default_factory=lambda: [0.0, 0.5, 1.0])
    grid_family: str = "uniform"
    horizon: float = 1.0
    fine_factor: int = 64
    level: float = 0.95
    statistics: list[str] | None = None
    checks: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.replications < 2:
            raise PlanError("need at least 2 replications")
        for n in self.n_list:
            if n < MIN_N:
                raise PlanError(f"observation sizes must be >= {MIN_N}, got {n}")
        if self.grid_family not in ("uniform", "alternating"):
            raise PlanError(f"unknown grid family {self.grid_family!r}")
        if self.fine_factor < 2:
            raise PlanError("fine grid must be denser than the observation grid")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        d = dict(d)
        try:
            model = model_from_dict(d.pop("model"))
        except KeyError:
            raise PlanError("/model: missing") from None
        except Exception as exc:
            raise PlanError(f"/model: {exc}") from None
        try:
            return cls(model=model, **d)
        except TypeError as exc:
            raise PlanError(f"/: {exc}") from None

    def to_dict(self) -> dict:
        d = {
            "model": model_to_dict(self.model),
            "n_list": list(self.n_list),
            "replications": self.replications,
            "seed_base": self.seed_base,
            "c_list": list(self.c_list),
            "alpha_list": list(self.alpha_list),
            "grid_family": self.grid_family,
            "horizon": self.horizon,
            "fine_factor": self.fine_factor,
            "level": self.level,
            "checks": list(self.checks),
        }
        if self.statistics is not None:
            d["statistics"] = list(self.statistics)
        return d


def make_grid(family: str, n: int, horizon: float) -> SamplingGrid:
    """Observation grid of ``n`` intervals on [0, horizon]."""
    if family == "uniform":
        return validate_grid(np.linspace(0.0, horizon, n + 1))
    if family == "alternating":
        if n % 2:
            raise PlanError("alternating grids need an even interval count")
        a = 2.0 * horizon / (3.0 * n)
        dt = np.tile([a, 2.0 * a], n // 2)
        times = np.concatenate([[0.0], np.cumsum(dt)])
        times[-1] = horizon  # guard against cumulative rounding
        return validate_grid(times)
    raise PlanError(f"unknown grid family {family!r}")


def replicate_once(
    model: SimModel,
    n: int,
    c: float,
    alphas: list[float],
    seed,
    grid_family: str = "uniform",
    horizon: float = 1.0,
    fine_factor: int = 64,
    level: float = 0.95,
) -> dict:
    """One simulate -> estimate pass; returns raw per-replication statistics."""
    fine = simulate(model, horizon, fine_factor * n, seed)
    grid = make_grid(grid_family, n, horizon)
    series = subsample(fine, grid)
    truth = subsample_truth(fine, grid)
    obs_grid = series.grid
    root_dt = np.sqrt(obs_grid.dt_bar)

    rec: dict = {"n": n, "c": c, "tau_true": truth["tau"]}
    zz_true_path = realized_cov(truth["z"], truth["z"], obs_grid)
    rec["err_zz_true"] = (zz_true_path.terminal - truth["qv_z"][-1]) / root_dt
    rec["abserr_zz_true"] = abs(zz_true_path.terminal - truth["qv_z"][-1])
    rec["sup_zz_true"] = float(np.max(np.abs(zz_true_path.values - truth["qv_z"])))

    report_half = None
    for alpha in alphas:
        rep = estimate_anova(series, c=c, alpha=alpha, level=level)
        if alpha == 0.5:
            report_half = rep
        tag = f"a{alpha:g}"
        rec[f"err_{tag}"] = (rep.estimate.terminal - truth["qv_z"][-1]) / root_dt
        rec[f"abserr_{tag}"] = abs(rep.estimate.terminal - truth["qv_z"][-1])
        rec[f"bias_{tag}"] = rep.bias.terminal
        rec[f"ci_cover_{tag}"] = float(
            rep.ci_lo[-1] <= truth["qv_z"][-1] <= rep.ci_hi[-1]
        )
        rec[f"band_cover_{tag}"] = float(
            np.all((rep.band.lo <= truth["qv_z"]) & (truth["qv_z"] <= rep.band.hi))
        )
        if alpha == alphas[0]:
            rec["sup_rho"] = float(np.max(np.abs(rep.rho.values - truth["rho"])))
            rec["tau_hat"] = rep.avar.terminal
    if report_half is None:
        report_half = estimate_anova(series, c=c, alpha=0.5, level=level)
    rec["r2_T"] = float(r_squared(series["xi"], report_half).r2[-1])
    theta = fit_constant_beta(series["xi"], series["s"], obs_grid)
    fit = u_statistic(series["xi"], series["s"], obs_grid, theta, report_half)
    rec["theta_hat"] = fit.theta_hat
    rec["u_stat"] = fit.u_stat
    rec["p_value"] = fit.p_value
    rec["gap_hat"] = fit.gap
    rec["reject_5"] = float(fit.p_value < 0.05)
    return rec


def cell_seed(seed_base: int, n: int, rep: int) -> np.random.SeedSequence:
    """Independent, reproducible stream per (plan seed, grid size, replication)."""
    return np.random.SeedSequence([seed_base, n, rep])


@dataclass(frozen=True)
class McSummary:
    """Aggregated Monte Carlo results, one row per (n, c) cell."""

    rows: list[dict]
    replications: int
    seed_base: int

    def row(self, n: int, c: float) -> dict:
        for r in self.rows:
            if r["n"] == n and r["c"] == c:
                return r
        raise KeyError((n, c))

    def series(self, key: str) -> dict[int, float]:
        return {r["n"]: r[key] for r in self.rows}


def _aggregate(records: list[dict]) -> dict:
    keys = records[0].keys()
    out: dict = {}
    for key in keys:
        vals = np.asarray([r[key] for r in records], dtype=np.float64)
        if key in ("n", "c"):
            out[key] = records[0][key]
            continue
        out[f"{key}_mean"] = float(np.mean(vals))
        out[f"{key}_sd"] = float(np.std(vals, ddof=1))
        out[f"{key}_median"] = float(np.median(vals))
        out[f"{key}_se"] = float(np.std(vals, ddof=1) / np.sqrt(vals.size))
    out["count"] = len(records)
    return out


def run_plan(plan: ExperimentPlan, keep_records: bool = False) -> McSummary:
    """Execute every cell of the plan; deterministic given the seed base."""
    rows = []
    all_records: dict = {}
    for n in plan.n_list:
        for c in plan.c_list:
            records = [
                replicate_once(
                    plan.model,
                    n,
                    c,
                    plan.alpha_list,
                    cell_seed(plan.seed_base, n, rep),
                    grid_family=plan.grid_family,
                    horizon=plan.horizon,
                    fine_factor=plan.fine_factor,
                    level=plan.level,
                )
                for rep in range(plan.replications)
            ]
            row = _aggregate(records)
            errs = np.asarray([r["err_a0.5" if 0.5 in plan.alpha_list else f"err_a{plan.alpha_list[0]:g}"] for r in records])
            taus = np.asarray([r["tau_hat"] for r in records])
            if len(records) >= 200:
                ks = mixed_normal_check(errs, taus)
                row.update(ks)
            rows.append(row)
            if keep_records:
                all_records[(n, c)] = records
    summary = McSummary(rows=rows, replications=plan.replications, seed_base=plan.seed_base)
    if keep_records:
        object.__setattr__(summary, "_records", all_records)
    return summary


def rate_regression(ns, medians) -> tuple[float, float]:
    """Least-squares slope of log(median error) on log(n), with a 95% halfwidth."""
    ns = np.asarray(ns, dtype=np.float64)
    medians = np.asarray(medians, dtype=np.float64)
    if ns.size < 4:
        raise InsufficientCells("need at least 4 grid sizes for a rate fit")
    x = np.log(ns)
    y = np.log(medians)
    res = sstats.linregress(x, y)
    half = 1.96 * res.stderr if res.stderr is not None else np.nan
    return float(res.slope), float(half)


def mixed_normal_check(errors, tau_hats) -> dict:
    """Kolmogorov-Smirnov distances of normalized errors to a standard normal.

    Standardizing each replication by its own estimated variance undoes the
    variance mixture; the unstandardized ensemble is scaled by its sample
    standard deviation so only the shape is compared.
    """
    errors = np.asarray(errors, dtype=np.float64)
    tau_hats = np.asarray(tau_hats, dtype=np.float64)
    if errors.size < 200:
        raise InsufficientReplications(f"need at least 200 replications, got {errors.size}")
    standardized = errors / np.sqrt(np.clip(tau_hats, 1e-300, None))
    raw_scaled = errors / np.std(errors, ddof=1)
    return {
        "ks_standardized": float(sstats.kstest(standardized, "norm").statistic),
        "ks_unstandardized": float(sstats.kstest(raw_scaled, "norm").statistic),
    }


def evaluate_checks(plan: ExperimentPlan, summary: McSummary) -> dict:
    """Evaluate the plan's pass/fail checks against the aggregated rows."""
    verdict = {}
    for chk in plan.checks:
        try:
            name = chk["name"]
            stat = chk["statistic"]
            row = summary.row(chk.get("n", plan.n_list[0]), chk.get("c", plan.c_list[0]))
            value = row[stat]
        except KeyError as exc:
            raise PlanError(f"/checks/{chk.get('name', '?')}: unknown field {exc}") from None
        ok = True
        if "target" in chk:
            ok = abs(value - chk["target"]) <= chk.get("tol", 0.0)
        if "min" in chk:
            ok = ok and value >= chk["min"]
        if "max" in chk:
            ok = ok and value <= chk["max"]
        verdict[name] = {"pass": bool(ok), "value": value}
    verdict["all_pass"] = all(v["pass"] for k, v in verdict.items() if k != "all_pass")
    return verdict
