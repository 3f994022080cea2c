"""Score-vs-time and dynamics curves.

``score_curves`` plots sqrt(S_t)/t (the hedged quantity) on log-log axes
against the gamma/sqrt(t) reference, plus the horizontal 1/(2N) floor for
binary grid runs; both references come from the metadata sidecars.
``dynamics_curves`` plots the running fraction of periods whose behavior is
an epsilon'-equilibrium.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from calibra_plots.common import PALETTE, SchemaError, load_run, save_figure


def checkpoint_series(data, column: str):
    ts = sorted(data.scores)
    return np.array(ts), np.array([data.scores[t][column] for t in ts])


def score_curves(csv_paths, out_path):
    """Returns {path: (t, sqrt(S)/t, gamma)} and writes the figure."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    series = {}
    gamma_seen, floor_seen = None, None
    for k, csv_path in enumerate(csv_paths):
        data = load_run(csv_path)
        ts, s_over_t2 = checkpoint_series(data, "S_over_t2")
        if ts.size == 0:
            raise SchemaError(f"{csv_path}: no checkpoint rows to plot")
        curve = np.sqrt(s_over_t2)
        gamma = data.gamma()
        series[str(csv_path)] = (ts, curve, gamma)
        ax.loglog(ts, curve, color=PALETTE[k % len(PALETTE)], marker="o", ms=3, lw=1.2, label=data.label)
        gamma_seen = gamma if gamma is not None else gamma_seen
        n_cells = data.grid_cells()
        if n_cells:
            floor_seen = 1.0 / (2 * n_cells)
    ref_t = np.array(sorted({int(t) for s in series.values() for t in s[0]}))
    if gamma_seen is not None:
        ax.loglog(ref_t, gamma_seen / np.sqrt(ref_t), color="#999999", ls="--", lw=1.0, label="gamma/sqrt(t)")
    if floor_seen is not None:
        ax.axhline(floor_seen, color="#999999", ls=":", lw=1.0, label="1/(2N)")
    ax.set_xlabel("t")
    ax.set_ylabel("sqrt(S_t)/t")
    ax.legend(frameon=False, fontsize=8)
    out = save_figure(fig, out_path)
    plt.close(fig)
    return series, out


def dynamics_curves(csv_paths, out_path, eps_prime: float):
    """Returns {path: (t, running fraction in NE(eps'))} and writes the figure."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    series = {}
    for k, csv_path in enumerate(csv_paths):
        data = load_run(csv_path)
        if data.ne_gap is None:
            raise SchemaError(f"{csv_path}: no ne_gap column; not a dynamics run")
        inside = (data.ne_gap <= eps_prime).astype(float)
        running = np.cumsum(inside) / np.arange(1, len(inside) + 1)
        series[str(csv_path)] = (data.t, running)
        ax.plot(data.t, running, color=PALETTE[k % len(PALETTE)], lw=1.2, label=data.label)
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel("t")
    ax.set_ylabel(f"fraction of periods in NE({eps_prime})")
    ax.legend(frameon=False, fontsize=8)
    out = save_figure(fig, out_path)
    plt.close(fig)
    return series, out


def score_main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="score-vs-time curves")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        series, out = score_curves(args.inputs, args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out} with {len(series)} curve(s)")
    return 0


def dynamics_main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="dynamics NE-fraction curves")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--eps-prime", type=float, required=True)
    args = parser.parse_args(argv)
    try:
        series, out = dynamics_curves(args.inputs, args.out, args.eps_prime)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out} with {len(series)} curve(s)")
    return 0


if __name__ == "__main__":
    sys.exit(score_main())
