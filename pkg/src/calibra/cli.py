"""Batch experiment runner.

Subcommands:

- ``run-binary``    binary grid forecasting runs
- ``run-forecast``  FP / MM / AD forecasting runs on a convex domain
- ``run-dynamics``  continuously calibrated learning on a finite game
- ``score``         re-score a recorded run log under a new binning
- ``verify``        re-check the recorded scores and certificates of a run

Each run writes ``<name>_seed<seed>.csv`` (one row per period; score columns
filled at checkpoint rows) and a ``.meta.json`` sidecar echoing the full
config, so outputs are reproducible byte for byte given (config, seed).

Exit codes: 0 success, 2 config/schema error, 3 solver or certificate
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from calibra.adversaries import adversary_from_config
from calibra.binning import indicator_binning, tent_binning
from calibra.domains import Interval01, domain_from_config
from calibra.dynamics import run_dynamics
from calibra.games import DEMO_GAMES, GameSpec
from calibra.history import replay
from calibra.procedures import ADEngine, Binary1DEngine, FPEngine, MMEngine, run
from calibra.scores import binned_score, classic_score, square_score, sum_squared_gaps

log = logging.getLogger("calibra")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

SCORE_COLUMNS = ["K_classic", "K_binned", "S_over_t2", "X_over_t"]
STOCHASTIC_KINDS = ("mm", "ad", "binary1d")


class ConfigError(ValueError):
    pass


class VerifyError(RuntimeError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _require_keys(cfg: dict, allowed: dict, where: str) -> None:
    """``allowed`` maps key -> required flag.  Unknown keys are hard errors."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where} must be an object")
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")
    for key, required in allowed.items():
        if required and key not in cfg:
            raise ConfigError(f"missing required key {key!r} in {where}")


def _seed_list(spec) -> list[int]:
    if isinstance(spec, list):
        seeds = [int(s) for s in spec]
    elif isinstance(spec, dict):
        _require_keys(spec, {"start": True, "count": True}, "seeds")
        seeds = list(range(int(spec["start"]), int(spec["start"]) + int(spec["count"])))
    else:
        raise ConfigError("seeds must be a list or {start, count}")
    if not seeds:
        raise ConfigError("need at least one seed")
    offset = int(os.environ.get("CALIBRA_SEED_OFFSET", "0"))
    return [s + offset for s in seeds]


def _checkpoint_spec(cfg, horizon: int) -> list[int] | None:
    if cfg is None or cfg == "pow2":
        return None  # procedures default: powers of two plus the horizon
    if isinstance(cfg, list):
        ts = sorted({int(t) for t in cfg})
        if any(t < 1 or t > horizon for t in ts):
            raise ConfigError("checkpoints must lie in [1, horizon]")
        return ts
    raise ConfigError('checkpoints must be "pow2" or a list of periods')


def _retention(cfg) -> str:
    if cfg is None:
        return "full"
    _require_keys(cfg, {"log": True}, "retention")
    mode = cfg["log"]
    if mode not in ("full", "checkpoints"):
        raise ConfigError('retention.log must be "full" or "checkpoints"')
    return mode


# ---------------------------------------------------------------------------
# config -> engine / game
# ---------------------------------------------------------------------------

_COMMON_RUN_KEYS = {
    "name": False,
    "procedure": True,
    "domain": False,
    "adversary": True,
    "horizon": True,
    "seeds": True,
    "checkpoints": False,
    "retention": False,
}


def _build_domain(cfg):
    try:
        return domain_from_config(cfg if cfg is not None else {"kind": "interval01"})
    except Exception as exc:
        raise ConfigError(str(exc)) from exc


def _build_engine(proc: dict, domain):
    kind = proc.get("kind")
    if kind == "fp":
        _require_keys(
            proc,
            {"kind": True, "grid_resolution": True, "tent_width": False, "tol": False},
            "procedure",
        )
        grid = domain.uniform_grid(int(proc["grid_resolution"]))
        width = float(proc.get("tent_width", 2.0 * grid.covering_radius))
        return FPEngine(domain, tent_binning(grid, width), tol=proc.get("tol"))
    if kind == "mm":
        _require_keys(proc, {"kind": True, "grid_resolution": True, "epsilon": True}, "procedure")
        grid = domain.uniform_grid(int(proc["grid_resolution"]))
        return MMEngine(domain, grid, float(proc["epsilon"]))
    if kind == "ad":
        _require_keys(proc, {"kind": True, "grid_resolution": True, "epsilon": True}, "procedure")
        grid = domain.uniform_grid(int(proc["grid_resolution"]))
        return ADEngine(domain, grid, float(proc["epsilon"]))
    if kind == "binary1d":
        _require_keys(proc, {"kind": True, "N": True}, "procedure")
        return Binary1DEngine(int(proc["N"]))
    raise ConfigError(f"unknown procedure kind {kind!r}")


def _validate_leak(proc_kind: str, adversary_cfg: dict, allow_leak_break: bool) -> None:
    mode = adversary_cfg.get("mode", "history-only")
    if adversary_cfg.get("kind") == "threshold_leaky" and "mode" not in adversary_cfg:
        mode = "realization-leak"
    if mode == "realization-leak" and proc_kind in STOCHASTIC_KINDS and not allow_leak_break:
        raise ConfigError(
            "a realization-leak adversary invalidates stochastic procedures; "
            "pass --allow-leak-break to run this demonstration anyway"
        )


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------


def _csv_path(out_dir: Path, name: str, seed: int) -> Path:
    return out_dir / f"{name}_seed{seed}.csv"


def _meta_path(out_dir: Path, name: str, seed: int) -> Path:
    return out_dir / f"{name}_seed{seed}.meta.json"


def _write_csv(path: Path, m: int, forecasts, actions, rows_by_t: dict, per_period: bool, ne_gaps=None) -> int:
    header = (
        ["t"]
        + [f"forecast_{i}" for i in range(m)]
        + [f"action_{i}" for i in range(m)]
        + SCORE_COLUMNS
        + (["ne_gap"] if ne_gaps is not None else [])
    )
    written = 0
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(1, len(forecasts) + 1):
            score_row = rows_by_t.get(t)
            if not per_period and score_row is None:
                continue
            cells = [str(t)]
            cells += [_fmt(v) for v in forecasts[t - 1]]
            cells += [_fmt(v) for v in actions[t - 1]]
            if score_row is None:
                cells += ["" for _ in SCORE_COLUMNS]
            else:
                cells += [_fmt(score_row[c]) for c in SCORE_COLUMNS]
            if ne_gaps is not None:
                cells.append(_fmt(ne_gaps[t - 1]))
            fh.write(",".join(cells) + "\n")
            written += 1
    return written


def _write_meta(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# single-run execution (top level so worker processes can import it)
# ---------------------------------------------------------------------------


def execute_forecast_run(config: dict, seed: int, out_dir: str) -> dict:
    proc = config["procedure"]
    domain = _build_domain(config.get("domain"))
    if proc.get("kind") == "binary1d" and not isinstance(domain, Interval01):
        raise ConfigError("the binary procedure runs on the unit interval")
    engine = _build_engine(proc, domain)
    adversary = adversary_from_config(config["adversary"], domain)
    horizon = int(config["horizon"])
    cps = _checkpoint_spec(config.get("checkpoints"), horizon)
    per_period = _retention(config.get("retention")) == "full"

    record = run(engine, adversary, horizon=horizon, seed=seed, checkpoints=cps)
    name = config.get("name", "run")
    out = Path(out_dir)
    rows_by_t = {row["t"]: row for row in record.checkpoints}
    n_rows = _write_csv(
        _csv_path(out, name, seed), domain.m, record.forecasts, record.actions, rows_by_t, per_period
    )
    meta = {
        "format_version": 1,
        "config": config,
        "seed": seed,
        "domain": {"kind": type(domain).__name__, "m": domain.m, "gamma": domain.diameter},
        "engine": record.engine,
        "adversary": record.adversary,
        "horizon": horizon,
        "completed": record.completed,
        "aborted": record.aborted,
        "abort_reason": record.abort_reason,
        "checkpoints": record.checkpoints,
        "certificates": {
            "max_step_violation": record.max_step_violation,
            "max_expected_error": record.max_expected_error,
            "max_locality_radius": record.max_locality_radius,
            "max_support_size": record.max_support_size,
        },
        "csv": {"path": _csv_path(out, name, seed).name, "rows": n_rows, "per_period": per_period},
    }
    _write_meta(_meta_path(out, name, seed), meta)
    if record.aborted:
        raise VerifyError(f"seed {seed}: solver failure after {record.completed} periods: {record.abort_reason}")
    return {"seed": seed, "final": record.final_scores, "max_step_violation": record.max_step_violation}


def execute_dynamics_run(config: dict, seed: int, out_dir: str) -> dict:
    game_cfg = config["game"]
    if "name" in game_cfg:
        _require_keys(game_cfg, {"name": True}, "game")
        if game_cfg["name"] not in DEMO_GAMES:
            raise ConfigError(f"unknown demo game {game_cfg['name']!r}; have {sorted(DEMO_GAMES)}")
        game = DEMO_GAMES[game_cfg["name"]]()
    else:
        _require_keys(game_cfg, {"shapes": True, "payoffs": True}, "game")
        game = GameSpec.from_json_dict(game_cfg)
    binning_cfg = config.get("binning") or {}
    _require_keys(binning_cfg, {"grid_resolution": False, "width_factor": False}, "binning")
    horizon = int(config["horizon"])
    per_period = _retention(config.get("retention")) == "full"
    traj = run_dynamics(
        game,
        epsilon=float(config["epsilon"]),
        horizon=horizon,
        seed=seed,
        grid_resolution=int(binning_cfg.get("grid_resolution", 4)),
        width_factor=float(binning_cfg.get("width_factor", 2.0)),
        checkpoints=_checkpoint_spec(config.get("checkpoints"), horizon),
    )
    name = config.get("name", "dynamics")
    out = Path(out_dir)
    rows_by_t = {row["t"]: row for row in traj.checkpoints}
    n_rows = _write_csv(
        _csv_path(out, name, seed),
        traj.forecasts.shape[1],
        traj.forecasts,
        traj.actions,
        rows_by_t,
        per_period,
        ne_gaps=traj.ne_gaps,
    )
    meta = {
        "format_version": 1,
        "config": config,
        "seed": seed,
        "domain": {"kind": "ProductOfSimplices", "m": traj.forecasts.shape[1], "gamma": game.domain().diameter},
        "engine": traj.engine,
        "game": traj.game,
        "epsilon": traj.epsilon,
        "horizon": horizon,
        "completed": traj.completed,
        "aborted": traj.aborted,
        "abort_reason": traj.abort_reason,
        "checkpoints": traj.checkpoints,
        "certificates": {"max_step_violation": float(traj.step_violations.max()) if traj.completed else 0.0},
        "csv": {"path": _csv_path(out, name, seed).name, "rows": n_rows, "per_period": per_period},
    }
    _write_meta(_meta_path(out, name, seed), meta)
    if traj.aborted:
        raise VerifyError(f"seed {seed}: solver failure after {traj.completed} periods: {traj.abort_reason}")
    return {"seed": seed, "final": traj.checkpoints[-1] if traj.checkpoints else {}}


_EXECUTORS = {"forecast": execute_forecast_run, "dynamics": execute_dynamics_run}


def _pool_worker(args):
    kind, config, seed, out_dir = args
    return _EXECUTORS[kind](config, seed, out_dir)


def _run_batch(kind: str, config: dict, out_dir: str, jobs: int) -> int:
    seeds = _seed_list(config["seeds"])
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    tasks = [(kind, config, seed, out_dir) for seed in seeds]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(_pool_worker, tasks):
                log.info("seed %s done: %s", result["seed"], result.get("final"))
    else:
        for task in tasks:
            result = _pool_worker(task)
            log.info("seed %s done: %s", result["seed"], result.get("final"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# score / verify
# ---------------------------------------------------------------------------


def _read_csv(path: Path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    idx = {name: i for i, name in enumerate(header)}
    m = sum(1 for name in header if name.startswith("forecast_"))
    ts = np.array([int(r[idx["t"]]) for r in rows])
    forecasts = np.array([[float(r[idx[f"forecast_{i}"]]) for i in range(m)] for r in rows])
    actions = np.array([[float(r[idx[f"action_{i}"]]) for i in range(m)] for r in rows])
    scores = {}
    for r in rows:
        cell = r[idx["K_classic"]]
        if cell != "":
            scores[int(r[idx["t"]])] = {c: float(r[idx[c]]) for c in SCORE_COLUMNS if r[idx[c]] != ""}
    return ts, forecasts, actions, scores, header


def _binning_from_meta(meta: dict, domain):
    desc = meta["engine"]["binning"]
    if desc["kind"] == "tents":
        grid = domain.uniform_grid(_resolution_for_grid(domain, desc["grid_size"]))
        return tent_binning(grid, desc["width"])
    if desc["kind"] == "indicators":
        grid = domain.uniform_grid(_resolution_for_grid(domain, desc["grid_size"]))
        return indicator_binning(grid)
    raise VerifyError(f"cannot rebuild binning of kind {desc['kind']!r}")


def _resolution_for_grid(domain, grid_size: int) -> int:
    for resolution in range(1, 10_000):
        if len(domain.uniform_grid(resolution)) == grid_size:
            return resolution
    raise VerifyError(f"no uniform grid of size {grid_size} on {domain}")


def _rebuild_domain_from_meta(meta: dict):
    cfg = meta["config"].get("domain")
    if cfg is not None:
        return _build_domain(cfg)
    if meta["domain"]["kind"] == "Interval01":
        return Interval01()
    if meta["domain"]["kind"] == "ProductOfSimplices":
        game = GameSpec.from_json_dict(meta["game"])
        return game.normalized().domain()
    raise VerifyError("cannot rebuild the domain from metadata")


def cmd_score(args) -> int:
    csv_path = Path(args.run)
    meta_path = Path(args.meta) if args.meta else csv_path.with_suffix("").with_suffix(".meta.json")
    meta = json.loads(meta_path.read_text())
    if not meta["csv"]["per_period"]:
        raise ConfigError("re-scoring needs a run recorded with full (c, a) retention")
    domain = _rebuild_domain_from_meta(meta)
    ts, forecasts, actions, _, _ = _read_csv(csv_path)

    grid = domain.uniform_grid(int(args.grid_resolution))
    width = args.tent_width if args.tent_width is not None else 2.0 * grid.covering_radius
    binning = tent_binning(grid, float(width)) if args.binning == "tents" else indicator_binning(grid)

    out_rows = []
    stats = replay(domain, binning, forecasts[:0], actions[:0])
    cps = sorted({row["t"] for row in meta.get("checkpoints", [])}) or [len(ts)]
    k = 0
    for t in range(1, len(ts) + 1):
        stats.update(forecasts[t - 1], actions[t - 1])
        if k < len(cps) and t == cps[k]:
            k += 1
            k_classic = classic_score(stats)
            k_binned = binned_score(stats)
            if k_binned > k_classic + 1e-9:
                raise VerifyError(f"binned score {k_binned} exceeds classic score {k_classic} at t={t}")
            out_rows.append(
                {
                    "t": t,
                    "K_classic": k_classic,
                    "K_binned": k_binned,
                    "S_over_t2": sum_squared_gaps(stats),
                    "X_over_t": square_score(stats),
                }
            )
    payload = {
        "source": csv_path.name,
        "binning": binning.describe(),
        "checkpoints": out_rows,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _verify_one(csv_path: Path, meta_path: Path, tol: float = 1e-9) -> list[str]:
    problems: list[str] = []
    meta = json.loads(meta_path.read_text())
    ts, forecasts, actions, score_rows, header = _read_csv(csv_path)
    if meta["csv"]["rows"] != len(ts):
        problems.append(f"{csv_path.name}: row count {len(ts)} != recorded {meta['csv']['rows']}")
    if not meta["csv"]["per_period"]:
        return problems  # nothing else is recomputable without the full log

    domain = _rebuild_domain_from_meta(meta)
    binning = _binning_from_meta(meta, domain)
    stats = replay(domain, binning, forecasts[:0], actions[:0])
    recorded = {row["t"]: row for row in meta.get("checkpoints", [])}
    max_dfh = -np.inf
    is_fp = meta["engine"]["kind"] == "fp"
    extremes = domain.extreme_points()
    for t in range(1, len(ts) + 1):
        if is_fp:
            gaps = stats.gaps()
            phi = binning.evaluate(forecasts[t - 1]) @ gaps
            viol = float((extremes @ phi).max() - phi @ forecasts[t - 1])
            max_dfh = max(max_dfh, viol)
        stats.update(forecasts[t - 1], actions[t - 1])
        row = recorded.get(t)
        if row is not None:
            fresh = {
                "K_classic": classic_score(stats),
                "K_binned": binned_score(stats),
                "S_over_t2": sum_squared_gaps(stats),
                "X_over_t": square_score(stats),
            }
            for key, value in fresh.items():
                if key in row and abs(row[key] - value) > tol:
                    problems.append(
                        f"{csv_path.name}: {key} at t={t} recomputes to {value:.12g}, "
                        f"recorded {row[key]:.12g}"
                    )
            in_csv = score_rows.get(t, {})
            for key, value in in_csv.items():
                if key in fresh and abs(fresh[key] - value) > tol:
                    problems.append(f"{csv_path.name}: CSV {key} at t={t} mismatches recomputation")
    if is_fp:
        stored = meta["certificates"]["max_step_violation"]
        if max_dfh > stored + 1e-9:
            problems.append(
                f"{csv_path.name}: replayed hedging violation {max_dfh:.3e} exceeds recorded {stored:.3e}"
            )
    return problems


def cmd_verify(args) -> int:
    targets = []
    root = Path(args.run)
    if root.is_dir():
        targets = sorted(root.glob("*.csv"))
    elif root.suffix == ".csv":
        targets = [root]
    else:
        raise ConfigError(f"verify needs a run CSV or a directory, got {root}")
    if not targets:
        raise ConfigError(f"no run CSVs under {root}")
    all_problems = []
    for csv_path in targets:
        meta_path = csv_path.with_suffix("").with_suffix(".meta.json")
        if not meta_path.exists():
            all_problems.append(f"{csv_path.name}: missing metadata sidecar")
            continue
        all_problems.extend(_verify_one(csv_path, meta_path))
    if all_problems:
        for p in all_problems:
            print(f"MISMATCH {p}")
        return EXIT_SOLVER
    print(f"verified {len(targets)} run(s): certificates and scores reproduce")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_run_flags(sub):
    sub.add_argument("--config", required=True, help="experiment config JSON")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--jobs", type=int, default=1, help="seed-parallel workers")
    sub.add_argument(
        "--allow-leak-break",
        action="store_true",
        help="permit realization-leak adversaries against stochastic procedures",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calibra", description=__doc__)
    parser.add_argument("--log-level", default="INFO", help="logging level")
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("run-binary", "run-forecast", "run-dynamics"):
        _add_run_flags(subs.add_parser(name))

    score = subs.add_parser("score", help="re-score a recorded run under a new binning")
    score.add_argument("--run", required=True, help="run CSV path")
    score.add_argument("--meta", help="metadata sidecar (default: next to the CSV)")
    score.add_argument("--binning", choices=["tents", "indicators"], default="tents")
    score.add_argument("--grid-resolution", type=int, required=True)
    score.add_argument("--tent-width", type=float)
    score.add_argument("--out", help="write the score report here instead of stdout")

    verify = subs.add_parser("verify", help="re-check recorded scores and certificates")
    verify.add_argument("--run", required=True, help="run CSV or output directory")
    return parser


def run_experiment(config_path: str, out_dir: str, jobs: int = 1, allow_leak_break: bool = False) -> int:
    """Programmatic equivalent of the run-* subcommands.

    The experiment kind is inferred from the config (a "game" section means
    dynamics); returns the process exit code instead of raising.
    """
    try:
        config = _load_config(config_path)
        if "game" in config:
            _validate_run_config("run-dynamics", config, allow_leak_break)
            return _run_batch("dynamics", config, out_dir, jobs)
        command = "run-binary" if config.get("procedure", {}).get("kind") == "binary1d" else "run-forecast"
        _validate_run_config(command, config, allow_leak_break)
        return _run_batch("forecast", config, out_dir, jobs)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except VerifyError as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("invalid experiment: %s", exc)
        return EXIT_CONFIG


def _validate_run_config(command: str, config: dict, allow_leak_break: bool) -> None:
    if command == "run-dynamics":
        _require_keys(
            config,
            {
                "name": False,
                "game": True,
                "epsilon": True,
                "binning": False,
                "horizon": True,
                "seeds": True,
                "checkpoints": False,
                "retention": False,
            },
            "config",
        )
        return
    _require_keys(config, _COMMON_RUN_KEYS, "config")
    proc_kind = config["procedure"].get("kind")
    if command == "run-binary" and proc_kind != "binary1d":
        raise ConfigError('run-binary needs procedure.kind == "binary1d"')
    if command == "run-forecast" and proc_kind not in ("fp", "mm", "ad"):
        raise ConfigError('run-forecast needs procedure.kind in {"fp", "mm", "ad"}')
    _validate_leak(proc_kind, config["adversary"], allow_leak_break)
    _checkpoint_spec(config.get("checkpoints"), int(config["horizon"]))
    _retention(config.get("retention"))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO))
    try:
        if args.command in ("run-binary", "run-forecast", "run-dynamics"):
            config = _load_config(args.config)
            _validate_run_config(args.command, config, args.allow_leak_break)
            kind = "dynamics" if args.command == "run-dynamics" else "forecast"
            return _run_batch(kind, config, args.out, args.jobs)
        if args.command == "score":
            return cmd_score(args)
        if args.command == "verify":
            return cmd_verify(args)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except VerifyError as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        # incompatible domain/adversary/procedure combinations surface here
        log.error("invalid experiment: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
