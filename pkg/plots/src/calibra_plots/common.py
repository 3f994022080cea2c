"""CSV/JSON readers for the run-output contract.

Column contract: ``t, forecast_0..forecast_{m-1}, action_0..action_{m-1},
K_classic, K_binned, S_over_t2, X_over_t[, ne_gap]``; score cells may be
empty off checkpoint rows.  Each CSV has a ``.meta.json`` sidecar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCORE_COLUMNS = ("K_classic", "K_binned", "S_over_t2", "X_over_t")

# Okabe-Ito palette: colorblind-safe line colors.
PALETTE = ["#0072B2", "#D55E00", "#009E73", "#CC79A7", "#56B4E9", "#E69F00", "#000000"]


class SchemaError(ValueError):
    """The file does not match the run-output contract."""


@dataclass
class RunData:
    path: Path
    t: np.ndarray
    forecasts: np.ndarray  # (rows, m)
    actions: np.ndarray  # (rows, m)
    scores: dict  # t -> {column: value} at checkpoint rows
    ne_gap: np.ndarray | None
    meta: dict | None

    @property
    def m(self) -> int:
        return self.forecasts.shape[1]

    @property
    def label(self) -> str:
        seed = self.meta.get("seed") if self.meta else None
        return f"{self.path.stem}" if seed is None else f"seed {seed}"

    def gamma(self) -> float | None:
        if self.meta and "domain" in self.meta:
            return float(self.meta["domain"].get("gamma"))
        return None

    def grid_cells(self) -> int | None:
        """N for binary runs, read back from the config echo."""
        if not self.meta:
            return None
        proc = self.meta.get("config", {}).get("procedure", {})
        if proc.get("kind") == "binary1d":
            return int(proc["N"])
        return None


def load_run(csv_path) -> RunData:
    path = Path(csv_path)
    try:
        lines = path.read_text().strip().split("\n")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise SchemaError(f"{path} is empty")
    header = lines[0].split(",")
    if header[0] != "t" or len(header) < 2 or not header[1].startswith("forecast_"):
        raise SchemaError(f"{path} does not start with the t/forecast columns: {header[:3]}")
    m = sum(1 for h in header if h.startswith("forecast_"))
    expected = (
        ["t"]
        + [f"forecast_{i}" for i in range(m)]
        + [f"action_{i}" for i in range(m)]
        + list(SCORE_COLUMNS)
    )
    if header[: len(expected)] != expected:
        raise SchemaError(f"{path} header mismatch: {header}")
    has_gap = header[len(expected) :] == ["ne_gap"]
    if header[len(expected) :] not in ([], ["ne_gap"]):
        raise SchemaError(f"{path} has unexpected trailing columns: {header[len(expected):]}")

    rows = [line.split(",") for line in lines[1:] if line]
    t = np.array([int(r[0]) for r in rows])
    forecasts = np.array([[float(r[1 + i]) for i in range(m)] for r in rows])
    actions = np.array([[float(r[1 + m + i]) for i in range(m)] for r in rows])
    scores = {}
    base = 1 + 2 * m
    for r in rows:
        if r[base] != "":
            scores[int(r[0])] = {
                col: float(r[base + j]) for j, col in enumerate(SCORE_COLUMNS) if r[base + j] != ""
            }
    gaps = np.array([float(r[base + 4]) for r in rows]) if has_gap else None

    meta = None
    meta_path = path.with_suffix("").with_suffix(".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    return RunData(path=path, t=t, forecasts=forecasts, actions=actions, scores=scores, ne_gap=gaps, meta=meta)


def save_figure(fig, out_path) -> Path:
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, bbox_inches="tight")
    return out
