"""Reliability diagram: per-bin empirical outcome frequency vs forecast.

Bins are derived from the raw forecast/action columns only.  Each bin is
drawn at (mean forecast, mean action) with its count annotated; a perfectly
calibrated run sits on the diagonal.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from calibra_plots.common import PALETTE, SchemaError, load_run, save_figure


def bin_table(forecasts: np.ndarray, actions: np.ndarray, bin_width: float) -> list[dict]:
    """Aggregate scalar forecasts into width-``bin_width`` buckets."""
    c = forecasts[:, 0]
    a = actions[:, 0]
    edges = np.arange(0.0, 1.0 + bin_width, bin_width)
    idx = np.clip(np.digitize(c, edges) - 1, 0, len(edges) - 2)
    rows = []
    for b in range(len(edges) - 1):
        mask = idx == b
        n = int(mask.sum())
        if n == 0:
            continue
        rows.append(
            {
                "bin": b,
                "lo": float(edges[b]),
                "hi": float(edges[b + 1]),
                "count": n,
                "mean_forecast": float(c[mask].mean()),
                "mean_action": float(a[mask].mean()),
            }
        )
    return rows


def reliability_diagram(csv_paths, out_path, bin_width: float = 0.1):
    """Render the diagram for one or more runs; returns the per-run tables."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot([0, 1], [0, 1], color="#999999", lw=1.0, zorder=1)
    tables = {}
    for k, csv_path in enumerate(csv_paths):
        data = load_run(csv_path)
        if data.m != 1:
            raise SchemaError(f"{csv_path}: reliability diagrams need scalar forecasts, got m={data.m}")
        rows = bin_table(data.forecasts, data.actions, bin_width)
        tables[str(csv_path)] = rows
        xs = [r["mean_forecast"] for r in rows]
        ys = [r["mean_action"] for r in rows]
        sizes = [max(12.0, 40.0 * np.sqrt(r["count"] / max(r["count"] for r in rows))) for r in rows]
        color = PALETTE[k % len(PALETTE)]
        ax.scatter(xs, ys, s=sizes, color=color, label=data.label, zorder=3)
        for r in rows:
            ax.annotate(
                str(r["count"]),
                (r["mean_forecast"], r["mean_action"]),
                textcoords="offset points",
                xytext=(4, 4),
                fontsize=7,
                color=color,
            )
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("forecast")
    ax.set_ylabel("empirical frequency")
    ax.set_title("reliability")
    if len(csv_paths) > 1:
        ax.legend(frameon=False, fontsize=8)
    out = save_figure(fig, out_path)
    plt.close(fig)
    return tables, out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True, help="run CSV paths")
    parser.add_argument("--out", required=True, help="output image (vector format, e.g. .svg)")
    parser.add_argument("--bin-width", type=float, default=0.1)
    args = parser.parse_args(argv)
    try:
        tables, out = reliability_diagram(args.inputs, args.out, args.bin_width)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    total = sum(sum(r["count"] for r in rows) for rows in tables.values())
    print(f"wrote {out} ({total} periods across {len(tables)} run(s))")
    return 0


if __name__ == "__main__":
    sys.exit(main())
