"""End-to-end CLI contracts: files, manifests, determinism, exit codes."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

ENV = dict(os.environ, QVREG_MANIFEST_TIME="1970-01-01T00:00:00Z")


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "qvreg.cli", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
        env=ENV,
    )


@pytest.fixture
def model_file(tmp_path):
    p = tmp_path / "model.json"
    p.write_text(json.dumps({"variant": "ConstantRho", "rho": 1.0, "sigma_s": 1.0, "sigma_z": 1.0}))
    return p


@pytest.fixture
def linear_csv(tmp_path):
    rng = np.random.default_rng(0)
    n = 256
    times = np.linspace(0, 1, n + 1)
    s = np.concatenate([[0.0], np.cumsum(rng.standard_normal(n) / np.sqrt(n))])
    lines = ["time,s,xi"] + [f"{float(t)!r},{float(v)!r},{float(2 * v)!r}" for t, v in zip(times, s)]
    p = tmp_path / "linear.csv"
    p.write_text("\n".join(lines) + "\n")
    return p


# --- simulate ---


def test_simulate_writes_matching_files(tmp_path, model_file):
    out = tmp_path / "out"
    r = run_cli("--seed", 7, "--out-dir", out, "simulate", "--model", model_file, "--n", 128)
    assert r.returncode == 0, r.stderr
    obs = (out / "observations.csv").read_text().splitlines()
    truth = (out / "truth.csv").read_text().splitlines()
    assert obs[0] == "time,s,xi"
    assert truth[0].startswith("time,z,rho,")
    assert len(obs) == len(truth) == 130  # header + 129 grid times
    manifest = json.loads((out / "simulate_manifest.json").read_text())
    assert manifest["seeds"] == 7
    assert manifest["config"]["n"] == 128
    assert "model.json" in manifest["inputs"]


def test_simulate_deterministic_bytes(tmp_path, model_file):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        r = run_cli("--seed", 11, "--out-dir", out, "simulate", "--model", model_file, "--n", 128)
        assert r.returncode == 0, r.stderr
        outs.append((out / "observations.csv").read_bytes())
    assert outs[0] == outs[1]


def test_simulate_unknown_variant(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"variant": "NoSuchModel"}))
    r = run_cli("--out-dir", tmp_path / "o", "simulate", "--model", bad)
    assert r.returncode == 2
    assert "ConstantRho" in r.stderr  # lists the valid variants


# --- estimate / band / gof ---


def test_estimate_exact_linear(tmp_path, linear_csv):
    out = tmp_path / "est"
    r = run_cli("--out-dir", out, "estimate", "--input", linear_csv)
    assert r.returncode == 0, r.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["estimate_terminal"]) < 1e-10
    assert summary["r2_terminal"] == pytest.approx(1.0, abs=1e-10)
    header = (out / "report.csv").read_text().splitlines()[0]
    assert header == "time,estimate,bias,avar,ci_lo,ci_hi,band_lo,band_hi"
    rho_lines = (out / "rho.csv").read_text().splitlines()
    assert rho_lines[0] == "time,rho_hat,valid"
    assert rho_lines[-1].split(",")[1] == repr(2.0)


def test_estimate_missing_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,price\n0.0,1.0\n1.0,2.0\n")
    out = tmp_path / "o"
    r = run_cli("--out-dir", out, "estimate", "--input", bad)
    assert r.returncode == 2
    assert "'s'" in r.stderr
    assert not (out / "report.csv").exists()  # no partial outputs


def test_estimate_alpha_out_of_range_is_usage_error(tmp_path, linear_csv):
    out = tmp_path / "o"
    r = run_cli("--out-dir", out, "estimate", "--input", linear_csv, "--alpha", 1.5)
    assert r.returncode == 1
    assert not (out / "report.csv").exists()


def test_band_outputs(tmp_path, linear_csv):
    out = tmp_path / "band"
    r = run_cli("--out-dir", out, "band", "--input", linear_csv, "--level", 0.9)
    assert r.returncode == 0, r.stderr
    band = json.loads((out / "band.json").read_text())
    assert band["level"] == 0.9
    assert (out / "band.csv").read_text().splitlines()[0] == "time,estimate,band_lo,band_hi"


def test_gof_exact_linear(tmp_path, linear_csv):
    out = tmp_path / "gof"
    r = run_cli("--out-dir", out, "gof", "--input", linear_csv)
    assert r.returncode == 0, r.stderr
    gof = json.loads((out / "gof.json").read_text())
    assert gof["theta_hat"] == pytest.approx(2.0, rel=1e-12)
    assert gof["p_value"] == pytest.approx(1.0)
    assert abs(gof["gap"]) < 1e-10


# --- mc ---


def _plan(tmp_path, checks):
    plan = {
        "model": {"variant": "ConstantRho", "rho": 1.0, "sigma_s": 1.0, "sigma_z": 1.0},
        "n_list": [64],
        "replications": 2,
        "seed_base": 3,
        "alpha_list": [0.5],
        "fine_factor": 16,
        "checks": checks,
    }
    p = tmp_path / "plan.json"
    p.write_text(json.dumps(plan))
    return p


def test_mc_smoke_plan(tmp_path):
    plan = _plan(tmp_path, [{"name": "tau", "statistic": "tau_true_mean", "target": 2.0, "tol": 0.5}])
    out = tmp_path / "mc"
    r = run_cli("--out-dir", out, "mc", "--plan", plan)
    assert r.returncode == 0, r.stderr
    verdict = json.loads((out / "mc_verdict.json").read_text())
    assert verdict["all_pass"] is True
    assert (out / "mc_summary.csv").exists()


def test_mc_failing_check_exit_3(tmp_path):
    plan = _plan(tmp_path, [{"name": "bad", "statistic": "tau_true_mean", "target": 99.0, "tol": 0.1}])
    r = run_cli("--out-dir", tmp_path / "mc", "mc", "--plan", plan)
    assert r.returncode == 3


def test_mc_deterministic_bytes(tmp_path):
    plan = _plan(tmp_path, [])
    blobs = []
    for name in ("m1", "m2"):
        out = tmp_path / name
        r = run_cli("--out-dir", out, "mc", "--plan", plan)
        assert r.returncode == 0, r.stderr
        blobs.append((out / "mc_summary.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_mc_malformed_plan_pointer(tmp_path):
    p = tmp_path / "plan.json"
    p.write_text(json.dumps({"n_list": [64], "replications": 2, "seed_base": 0}))
    r = run_cli("--out-dir", tmp_path / "mc", "mc", "--plan", p)
    assert r.returncode == 2
    assert "/model" in r.stderr


def test_usage_error_unknown_subcommand():
    r = run_cli("frobnicate")
    assert r.returncode == 1


def test_json_logs_mode(tmp_path, linear_csv):
    out = tmp_path / "jl"
    r = run_cli("--json-logs", "--out-dir", out, "estimate", "--input", linear_csv)
    assert r.returncode == 0, r.stderr
    for line in r.stdout.strip().splitlines():
        json.loads(line)  # every log line is one JSON object
