"""Secondary acceptance: plots consume CLI outputs through the file contract
only (runs are produced by invoking the calibra CLI as a subprocess)."""

import json
import subprocess
import sys

import numpy as np
import pytest

from calibra_plots.curves import dynamics_curves, dynamics_main, score_curves, score_main
from calibra_plots.reliability import main as reliability_main, reliability_diagram


def run_cli(subcommand, config, out_dir, tmp_path):
    cfg_path = tmp_path / f"{config['name']}.json"
    cfg_path.write_text(json.dumps(config))
    proc = subprocess.run(
        [sys.executable, "-m", "calibra.cli", subcommand, "--config", str(cfg_path), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out_dir / f"{config['name']}_seed{config['seeds'][0]}.csv"


@pytest.fixture(scope="module")
def binary_run(tmp_path_factory):
    # The 1/(2N)-floor adversary: the run whose reliability picture the
    # 0.05 + 3 sigma band is about.  (Under a fair coin, rarely-visited
    # neighbor bins sit ~1/N off the diagonal by construction.)
    tmp = tmp_path_factory.mktemp("binary")
    config = {
        "name": "bin10",
        "procedure": {"kind": "binary1d", "N": 10},
        "adversary": {"kind": "worst_case_grid", "N": 10},
        "horizon": 100_000,
        "seeds": [0],
    }
    return run_cli("run-binary", config, tmp, tmp)


@pytest.fixture(scope="module")
def fp_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("fp")
    config = {
        "name": "fp21",
        "procedure": {"kind": "fp", "grid_resolution": 20, "tent_width": 0.1},
        "domain": {"kind": "interval01"},
        "adversary": {"kind": "threshold_leaky", "mode": "realization-leak"},
        "horizon": 10_000,
        "seeds": [0],
    }
    return run_cli("run-forecast", config, tmp, tmp)


@pytest.fixture(scope="module")
def dynamics_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("dyn")
    config = {
        "name": "mp",
        "game": {"name": "matching_pennies"},
        "epsilon": 0.05,
        "horizon": 4096,
        "seeds": [0],
    }
    return run_cli("run-dynamics", config, tmp, tmp)


def write_synthetic_csv(path, forecasts, actions):
    lines = ["t,forecast_0,action_0,K_classic,K_binned,S_over_t2,X_over_t"]
    for t, (c, a) in enumerate(zip(forecasts, actions), start=1):
        lines.append(f"{t},{c!r},{a!r},,,,")
    path.write_text("\n".join(lines) + "\n")
    return path


# -- reliability ---------------------------------------------------------------


def test_reliability_perfectly_calibrated_synthetic(tmp_path):
    # forecasts 0.25/0.75 with matching empirical frequencies sit on the diagonal
    rng = np.random.default_rng(0)
    forecasts, actions = [], []
    for p in (0.25, 0.75):
        for _ in range(4000):
            forecasts.append(p)
            actions.append(float(rng.random() < p))
    csv = write_synthetic_csv(tmp_path / "synth.csv", forecasts, actions)
    tables, out = reliability_diagram([csv], tmp_path / "synth.svg", bin_width=0.1)
    assert out.exists()
    for row in tables[str(csv)]:
        se = np.sqrt(0.25 / row["count"])
        assert abs(row["mean_action"] - row["mean_forecast"]) <= 3 * se + 1e-12


def test_reliability_constant_half_all_rain(tmp_path):
    csv = write_synthetic_csv(tmp_path / "half.csv", [0.5] * 50, [1.0] * 50)
    tables, _ = reliability_diagram([csv], tmp_path / "half.svg")
    rows = tables[str(csv)]
    assert len(rows) == 1
    assert rows[0]["mean_forecast"] == pytest.approx(0.5)
    assert rows[0]["mean_action"] == pytest.approx(1.0)
    assert rows[0]["count"] == 50


def test_reliability_binary_acceptance_run(binary_run, tmp_path):
    # Secondary acceptance: every bin of the N=10 binary run lies within
    # 0.05 + 3 sigma of the diagonal.
    tables, out = reliability_diagram([binary_run], tmp_path / "bin10.svg", bin_width=0.1)
    assert out.exists() and out.suffix == ".svg"
    rows = tables[str(binary_run)]
    assert rows, "no occupied bins"
    for row in rows:
        sigma = np.sqrt(0.25 / row["count"])
        assert abs(row["mean_action"] - row["mean_forecast"]) <= 0.05 + 3 * sigma


def test_reliability_rejects_schema_mismatch(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,value\n1,2\n")
    rc = reliability_main(["--in", str(bad), "--out", str(tmp_path / "x.svg")])
    assert rc == 2


def test_reliability_cli_entry(binary_run, tmp_path):
    rc = reliability_main(["--in", str(binary_run), "--out", str(tmp_path / "cli.svg"), "--bin-width", "0.1"])
    assert rc == 0
    assert (tmp_path / "cli.svg").exists()


# -- score curves ----------------------------------------------------------------


def test_score_curve_fp_below_reference(fp_run, tmp_path):
    # Secondary acceptance: sqrt(S_t)/t strictly below gamma/sqrt(t) at every
    # checkpoint of the hedged deterministic run.
    series, out = score_curves([fp_run], tmp_path / "fp.svg")
    assert out.exists()
    ts, curve, gamma = series[str(fp_run)]
    assert gamma == 1.0
    assert np.all(curve < gamma / np.sqrt(ts))


def test_score_curves_empty_input_usage_error():
    rc = score_main(["--in", "/nonexistent.csv", "--out", "/tmp/never.svg"])
    assert rc == 2


def test_score_curves_two_seeds_legend(binary_run, fp_run, tmp_path):
    series, out = score_curves([binary_run, fp_run], tmp_path / "two.svg")
    assert len(series) == 2 and out.exists()


# -- dynamics curves ----------------------------------------------------------------


def test_dynamics_curves_running_fraction(dynamics_run, tmp_path):
    series, out = dynamics_curves([dynamics_run], tmp_path / "dyn.svg", eps_prime=0.1)
    assert out.exists()
    ts, running = series[str(dynamics_run)]
    assert running.shape == ts.shape
    assert 0.0 <= running[-1] <= 1.0


def test_dynamics_rejects_non_dynamics_run(binary_run, tmp_path):
    rc = dynamics_main(["--in", str(binary_run), "--out", str(tmp_path / "no.svg"), "--eps-prime", "0.1"])
    assert rc == 2
