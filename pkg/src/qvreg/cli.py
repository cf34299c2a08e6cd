"""Command-line front door: simulate, estimate, band, gof, mc over CSV/JSON.

Every subcommand writes its outputs atomically (temp file + rename) together
with a manifest recording the tool version, the fully resolved configuration,
the seed(s), and SHA-256 digests of every input file.

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 Monte Carlo
check failure.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
import tempfile
import time

import click
import numpy as np

import qvreg
from qvreg.anova import estimate_anova
from qvreg.errors import ConfigError, PlanError, QvregError
from qvreg.gof import fit_constant_beta, r_squared, u_statistic
from qvreg.harness import ExperimentPlan, evaluate_checks, make_grid, run_plan
from qvreg.series import read_series_csv
from qvreg.sim import model_from_dict, simulate, subsample, subsample_truth


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qvreg-")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _log(ctx, event: str, **fields) -> None:
    if ctx.obj.get("json_logs"):
        click.echo(json.dumps({"event": event, **fields}, sort_keys=True))
    else:
        detail = " ".join(f"{k}={v}" for k, v in fields.items())
        click.echo(f"{event} {detail}".rstrip())


def _write_manifest(ctx, out_dir: str, command: str, config: dict, inputs: list[str], seeds=None) -> None:
    manifest = {
        "tool": "qvreg",
        "version": qvreg.__version__,
        "command": command,
        "config": config,
        "seeds": seeds,
        "inputs": {os.path.basename(p): _sha256(p) for p in inputs},
        "written_at": None,  # filled below so reruns stay byte-identical apart from this key
    }
    manifest["written_at"] = os.environ.get("QVREG_MANIFEST_TIME") or time.strftime(
        "%Y-%m-%dT%H:%M:%SZ", time.gmtime()
    )
    path = os.path.join(out_dir, f"{command}_manifest.json")
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _log(ctx, "manifest", path=path)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Base RNG seed.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--json-logs", is_flag=True, help="Emit machine-parseable JSON log lines.")
@click.pass_context
def cli(ctx, seed, out_dir, json_logs):
    """Residual quadratic-variation estimation toolkit."""
    os.makedirs(out_dir, exist_ok=True)
    ctx.obj = {"seed": seed, "out_dir": out_dir, "json_logs": json_logs}


@cli.command("simulate")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Model JSON file with a 'variant' key.")
@click.option("--n", type=int, default=1024, show_default=True, help="Observation intervals.")
@click.option("--horizon", type=float, default=1.0, show_default=True)
@click.option("--grid", "grid_family", type=click.Choice(["uniform", "alternating"]), default="uniform",
              show_default=True)
@click.option("--fine-factor", type=int, default=64, show_default=True,
              help="Simulation grid density relative to the observation grid.")
@click.pass_context
def cmd_simulate(ctx, model_path, n, horizon, grid_family, fine_factor):
    """Simulate one path pair and write observations plus ground truth."""
    with open(model_path) as f:
        try:
            model_dict = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{model_path}: invalid JSON ({exc})") from None
    model = model_from_dict(model_dict)
    seed = ctx.obj["seed"]
    fine = simulate(model, horizon, fine_factor * n, seed)
    grid = make_grid(grid_family, n, horizon)
    series = subsample(fine, grid)
    truth = subsample_truth(fine, grid)
    out_dir = ctx.obj["out_dir"]

    obs_path = os.path.join(out_dir, "observations.csv")
    _atomic_write(obs_path, _csv_text(
        ["time", "s", "xi"],
        zip(series.grid.times, series["s"], series["xi"]),
    ))
    truth_path = os.path.join(out_dir, "truth.csv")
    _atomic_write(truth_path, _csv_text(
        ["time", "z", "rho", "qv_z", "qv_s", "int_rho2_dss"],
        zip(truth["grid"].times, truth["z"], truth["rho"], truth["qv_z"],
            truth["qv_s"], truth["int_rho2_dss"]),
    ))
    _log(ctx, "simulate", observations=obs_path, truth=truth_path, n=n, tau=truth["tau"])
    config = {"model": model_dict, "n": n, "horizon": horizon, "grid": grid_family,
              "fine_factor": fine_factor}
    _write_manifest(ctx, out_dir, "simulate", config, [model_path], seeds=seed)


def _estimate_options(f):
    f = click.option("--alpha", type=click.FloatRange(0.0, 1.0), default=0.5, show_default=True)(f)
    f = click.option("--c", "c", type=float, default=1.0, show_default=True,
                     help="Smoothing constant; window length = sqrt(mean spacing)/c.")(f)
    f = click.option("--level", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
                     default=0.95, show_default=True)(f)
    f = click.option("--floor", type=float, default=None,
                     help="Spot regressor-variance floor (default: relative to terminal variation).")(f)
    f = click.option("--no-bias-correct", is_flag=True, help="Center intervals on the raw estimate.")(f)
    f = click.option("--isotonic", is_flag=True, help="Monotonize the estimate path.")(f)
    return f


def _run_estimate(ctx, input_path, alpha, c, level, floor, no_bias_correct, isotonic):
    series = read_series_csv(input_path)
    report = estimate_anova(
        series, c=c, alpha=alpha, level=level, floor=floor,
        bias_correct=not no_bias_correct, isotonic=isotonic,
    )
    return series, report


@cli.command("estimate")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="CSV with columns time,s,xi.")
@_estimate_options
@click.pass_context
def cmd_estimate(ctx, input_path, alpha, c, level, floor, no_bias_correct, isotonic):
    """Estimate the residual quadratic-variation path with intervals and band."""
    series, report = _run_estimate(ctx, input_path, alpha, c, level, floor, no_bias_correct, isotonic)
    out_dir = ctx.obj["out_dir"]
    report_path = os.path.join(out_dir, "report.csv")
    _atomic_write(report_path, _csv_text(
        ["time", "estimate", "bias", "avar", "ci_lo", "ci_hi", "band_lo", "band_hi"],
        zip(report.grid.times, report.estimate.values, report.bias.values,
            report.avar.values, report.ci_lo, report.ci_hi, report.band.lo, report.band.hi),
    ))
    rho_path = os.path.join(out_dir, "rho.csv")
    valid = (np.arange(len(report.grid)) >= report.rho.valid_from).astype(int)
    _atomic_write(rho_path, _csv_text(
        ["time", "rho_hat", "valid"],
        zip(report.grid.times, report.rho.values, valid),
    ))
    summary_path = os.path.join(out_dir, "summary.json")
    _atomic_write(summary_path, json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    _log(ctx, "estimate", report=report_path, summary=summary_path,
         estimate_terminal=report.estimate.terminal)
    config = {"input": input_path, "alpha": alpha, "c": c, "level": level, "floor": floor,
              "bias_correct": not no_bias_correct, "isotonic": isotonic}
    _write_manifest(ctx, out_dir, "estimate", config, [input_path])


@cli.command("band")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@_estimate_options
@click.pass_context
def cmd_band(ctx, input_path, alpha, c, level, floor, no_bias_correct, isotonic):
    """Write just the global confidence band for the estimate path."""
    series, report = _run_estimate(ctx, input_path, alpha, c, level, floor, no_bias_correct, isotonic)
    out_dir = ctx.obj["out_dir"]
    band_path = os.path.join(out_dir, "band.csv")
    _atomic_write(band_path, _csv_text(
        ["time", "estimate", "band_lo", "band_hi"],
        zip(report.grid.times, report.estimate.values, report.band.lo, report.band.hi),
    ))
    band_json = os.path.join(out_dir, "band.json")
    _atomic_write(band_json, json.dumps({
        "level": report.band.level,
        "tau_hat": report.band.tau_hat,
        "c_tau": report.band.c_tau,
        "halfwidth": float(np.sqrt(report.grid.dt_bar) * report.band.c_tau),
    }, indent=2, sort_keys=True) + "\n")
    _log(ctx, "band", band=band_path, tau_hat=report.band.tau_hat)
    config = {"input": input_path, "alpha": alpha, "c": c, "level": level, "floor": floor,
              "bias_correct": not no_bias_correct, "isotonic": isotonic}
    _write_manifest(ctx, out_dir, "band", config, [input_path])


@cli.command("gof")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--family", type=click.Choice(["constant"]), default="constant", show_default=True)
@_estimate_options
@click.pass_context
def cmd_gof(ctx, input_path, family, alpha, c, level, floor, no_bias_correct, isotonic):
    """Fit the constant-coefficient model and test its adequacy."""
    series, report = _run_estimate(ctx, input_path, alpha, c, level, floor, no_bias_correct, isotonic)
    grid = series.grid
    theta = fit_constant_beta(series["xi"], series["s"], grid)
    fit = u_statistic(series["xi"], series["s"], grid, theta, report)
    r2 = r_squared(series["xi"], report, level=level)
    out = {
        "family": family,
        "theta_hat": fit.theta_hat,
        "U": fit.u_stat,
        "null_mean": fit.null_mean,
        "null_sd": fit.null_sd,
        "p_value": fit.p_value,
        "gap": fit.gap,
        "r2_terminal": float(r2.r2[-1]),
        "r2_ci_terminal": [float(r2.ci_lo[-1]), float(r2.ci_hi[-1])],
    }
    out_dir = ctx.obj["out_dir"]
    gof_path = os.path.join(out_dir, "gof.json")
    _atomic_write(gof_path, json.dumps(out, indent=2, sort_keys=True) + "\n")
    _log(ctx, "gof", path=gof_path, p_value=fit.p_value)
    config = {"input": input_path, "family": family, "alpha": alpha, "c": c, "level": level}
    _write_manifest(ctx, out_dir, "gof", config, [input_path])


@cli.command("mc")
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Experiment plan JSON.")
@click.pass_context
def cmd_mc(ctx, plan_path):
    """Run a Monte Carlo plan; exit 3 if any of its checks fail."""
    with open(plan_path) as f:
        try:
            plan_dict = json.load(f)
        except json.JSONDecodeError as exc:
            raise PlanError(f"/: invalid JSON ({exc})") from None
    plan = ExperimentPlan.from_dict(plan_dict)
    summary = run_plan(plan)
    out_dir = ctx.obj["out_dir"]

    keys = sorted({k for row in summary.rows for k in row})
    stats = plan.statistics
    if stats is not None:
        keep = {"n", "c", "count"} | set(stats)
        keys = [k for k in keys if k in keep or any(k.startswith(s) for s in stats)]
    summary_path = os.path.join(out_dir, "mc_summary.csv")
    _atomic_write(summary_path, _csv_text(
        keys, ([row.get(k, "") for k in keys] for row in summary.rows)
    ))
    verdict = evaluate_checks(plan, summary)
    verdict_path = os.path.join(out_dir, "mc_verdict.json")
    _atomic_write(verdict_path, json.dumps(verdict, indent=2, sort_keys=True) + "\n")
    _log(ctx, "mc", summary=summary_path, verdict=verdict_path, all_pass=verdict["all_pass"])
    _write_manifest(ctx, out_dir, "mc", plan.to_dict(), [plan_path], seeds=plan.seed_base)
    if not verdict["all_pass"]:
        sys.exit(3)


def main() -> int:
    try:
        cli.main(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except (QvregError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
