import json

from calibra.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def binary_config(**overrides):
    cfg = {
        "name": "bin",
        "procedure": {"kind": "binary1d", "N": 5},
        "adversary": {"kind": "iid_bernoulli", "p": 0.5},
        "horizon": 64,
        "seeds": [0],
    }
    cfg.update(overrides)
    return cfg


def test_minimal_binary_run(tmp_path):
    cfg = write_config(tmp_path, binary_config(horizon=10))
    out = tmp_path / "out"
    assert main(["run-binary", "--config", cfg, "--out", str(out)]) == EXIT_OK
    csv = out / "bin_seed0.csv"
    meta = out / "bin_seed0.meta.json"
    assert csv.exists() and meta.exists()
    lines = csv.read_text().strip().split("\n")
    assert len(lines) == 11  # header + one row per period
    assert lines[0] == "t,forecast_0,action_0,K_classic,K_binned,S_over_t2,X_over_t"
    payload = json.loads(meta.read_text())
    assert payload["certificates"]["max_expected_error"] <= 1e-12


def test_unknown_key_rejected(tmp_path):
    cfg = write_config(tmp_path, binary_config(extra_knob=1))
    assert main(["run-binary", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_missing_config_rejected(tmp_path):
    assert main(["run-binary", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_wrong_procedure_for_subcommand(tmp_path):
    cfg = write_config(tmp_path, binary_config(procedure={"kind": "fp", "grid_resolution": 4}))
    assert main(["run-binary", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_leak_validation(tmp_path):
    bad = binary_config(adversary={"kind": "threshold_leaky", "mode": "realization-leak"})
    cfg = write_config(tmp_path, bad)
    out = str(tmp_path / "o")
    assert main(["run-binary", "--config", cfg, "--out", out]) == EXIT_CONFIG
    # the demonstration flag allows the broken pairing through
    assert main(["run-binary", "--config", cfg, "--out", out, "--allow-leak-break"]) == EXIT_OK
    # distribution leak is fine for stochastic procedures
    ok = binary_config(adversary={"kind": "threshold_leaky", "mode": "distribution-leak"})
    cfg2 = write_config(tmp_path, ok, name="ok.json")
    assert main(["run-binary", "--config", cfg2, "--out", out]) == EXIT_OK


def test_deterministic_outputs_byte_identical(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "name": "mm",
            "procedure": {"kind": "mm", "grid_resolution": 4, "epsilon": 0.3},
            "domain": {"kind": "interval01"},
            "adversary": {"kind": "iid_bernoulli", "p": 0.4},
            "horizon": 40,
            "seeds": [3],
        },
    )
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run-forecast", "--config", cfg, "--out", str(out1)]) == EXIT_OK
    assert main(["run-forecast", "--config", cfg, "--out", str(out2)]) == EXIT_OK
    assert (out1 / "mm_seed3.csv").read_bytes() == (out2 / "mm_seed3.csv").read_bytes()


def test_seed_offset_env(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, binary_config(horizon=8))
    out = tmp_path / "o"
    monkeypatch.setenv("CALIBRA_SEED_OFFSET", "100")
    assert main(["run-binary", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert (out / "bin_seed100.csv").exists()


def test_seed_parallel_jobs(tmp_path):
    cfg = write_config(tmp_path, binary_config(horizon=32, seeds={"start": 0, "count": 3}))
    out = tmp_path / "o"
    assert main(["run-binary", "--config", cfg, "--out", str(out), "--jobs", "2"]) == EXIT_OK
    for seed in range(3):
        assert (out / f"bin_seed{seed}.csv").exists()


def test_fp_run_and_verify_roundtrip(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "name": "fp",
            "procedure": {"kind": "fp", "grid_resolution": 10},
            "domain": {"kind": "interval01"},
            "adversary": {"kind": "threshold_leaky", "mode": "realization-leak"},
            "horizon": 128,
            "seeds": [0],
        },
    )
    out = tmp_path / "o"
    assert main(["run-forecast", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert main(["verify", "--run", str(out)]) == EXIT_OK


def test_verify_detects_tampering(tmp_path):
    cfg = write_config(tmp_path, binary_config(horizon=64))
    out = tmp_path / "o"
    assert main(["run-binary", "--config", cfg, "--out", str(out)]) == EXIT_OK
    csv = out / "bin_seed0.csv"
    lines = csv.read_text().split("\n")
    # flip the action bit of the second period
    cells = lines[2].split(",")
    cells[2] = "1" if float(cells[2]) == 0.0 else "0"
    lines[2] = ",".join(cells)
    csv.write_text("\n".join(lines))
    assert main(["verify", "--run", str(out)]) == EXIT_SOLVER


def test_score_rescores_under_finer_binning(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "name": "mm",
            "procedure": {"kind": "mm", "grid_resolution": 5, "epsilon": 0.2},
            "domain": {"kind": "interval01"},
            "adversary": {"kind": "iid_bernoulli", "p": 0.5},
            "horizon": 64,
            "seeds": [1],
        },
    )
    out = tmp_path / "o"
    assert main(["run-forecast", "--config", cfg, "--out", str(out)]) == EXIT_OK
    report = tmp_path / "rescore.json"
    rc = main(
        [
            "score",
            "--run",
            str(out / "mm_seed1.csv"),
            "--grid-resolution",
            "10",
            "--binning",
            "tents",
            "--out",
            str(report),
        ]
    )
    assert rc == EXIT_OK
    payload = json.loads(report.read_text())
    for row in payload["checkpoints"]:
        assert row["K_binned"] <= row["K_classic"] + 1e-9


def test_score_requires_full_retention(tmp_path):
    cfg = write_config(
        tmp_path, binary_config(horizon=32, retention={"log": "checkpoints"})
    )
    out = tmp_path / "o"
    assert main(["run-binary", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = (out / "bin_seed0.csv").read_text().strip().split("\n")
    assert len(lines) == 1 + 6  # header + checkpoint rows only (1,2,4,8,16,32)
    rc = main(["score", "--run", str(out / "bin_seed0.csv"), "--grid-resolution", "5"])
    assert rc == EXIT_CONFIG


def test_dynamics_run_writes_ne_gap_column(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "name": "dyn",
            "game": {"name": "matching_pennies"},
            "epsilon": 0.1,
            "horizon": 32,
            "seeds": [0],
            "binning": {"grid_resolution": 3},
        },
    )
    out = tmp_path / "o"
    assert main(["run-dynamics", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = (out / "dyn_seed0.csv").read_text().strip().split("\n")
    header = lines[0].split(",")
    assert header[-1] == "ne_gap"
    assert header[1:5] == ["forecast_0", "forecast_1", "forecast_2", "forecast_3"]
    assert len(lines) == 33
    assert main(["verify", "--run", str(out)]) == EXIT_OK


def test_dynamics_unknown_game(tmp_path):
    cfg = write_config(
        tmp_path,
        {"game": {"name": "chess"}, "epsilon": 0.1, "horizon": 8, "seeds": [0]},
    )
    assert main(["run-dynamics", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_explicit_checkpoints_flow_to_csv(tmp_path):
    cfg = write_config(tmp_path, binary_config(horizon=20, checkpoints=[5, 10, 20]))
    out = tmp_path / "o"
    assert main(["run-binary", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = (out / "bin_seed0.csv").read_text().strip().split("\n")[1:]
    filled = [int(l.split(",")[0]) for l in lines if l.split(",")[3] != ""]
    assert filled == [5, 10, 20]


def test_io_error_exit_code(tmp_path):
    from calibra.cli import EXIT_IO

    blocker = tmp_path / "blocker"
    blocker.write_text("a file where a directory must go")
    cfg = write_config(tmp_path, binary_config(horizon=4))
    rc = main(["run-binary", "--config", cfg, "--out", str(blocker / "out")])
    assert rc == EXIT_IO


def test_run_experiment_function(tmp_path):
    from calibra.cli import run_experiment

    cfg = write_config(tmp_path, binary_config(horizon=16))
    assert run_experiment(cfg, str(tmp_path / "o")) == EXIT_OK
    assert (tmp_path / "o" / "bin_seed0.csv").exists()
    dyn = write_config(
        tmp_path,
        {"name": "d", "game": {"name": "coordination_2x2"}, "epsilon": 0.1, "horizon": 8, "seeds": [0]},
        name="dyn.json",
    )
    assert run_experiment(dyn, str(tmp_path / "o2")) == EXIT_OK


def test_shipped_example_configs_validate():
    import pathlib

    from calibra.cli import _load_config, _validate_run_config

    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    commands = {
        "binary_floor.json": "run-binary",
        "fp_leaky.json": "run-forecast",
        "mm_antigap.json": "run-forecast",
        "dynamics_matching_pennies.json": "run-dynamics",
    }
    for name, command in commands.items():
        _validate_run_config(command, _load_config(str(root / name)), False)


def test_metadata_config_echo_reproduces_run(tmp_path):
    # The config echoed into the metadata re-validates and regenerates a
    # byte-identical CSV.
    cfg = write_config(tmp_path, binary_config(horizon=50))
    out1 = tmp_path / "o1"
    assert main(["run-binary", "--config", cfg, "--out", str(out1)]) == EXIT_OK
    echo = json.loads((out1 / "bin_seed0.meta.json").read_text())["config"]
    cfg2 = write_config(tmp_path, echo, name="echo.json")
    out2 = tmp_path / "o2"
    assert main(["run-binary", "--config", cfg2, "--out", str(out2)]) == EXIT_OK
    assert (out1 / "bin_seed0.csv").read_bytes() == (out2 / "bin_seed0.csv").read_bytes()
