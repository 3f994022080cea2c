"""Calibration scores and the score inequalities used to certify runs.

All scores are averages of bin errors weighted by bin occupancy:

- classic score     K_t       over exact-forecast bins (the finest binning)
- binned score      K^Pi_t    over an arbitrary binning, always <= K_t
- square score      X_t / t   occupancy-weighted squared bin errors
- smooth score      tents around each used forecast (Lipschitz bound 1/width)
- weak score        worst single Lipschitz weight from a finite tent family

The smooth and weak scores sweep finite families only, so they are lower
bounds on the corresponding suprema; the families are reported alongside.
"""

from __future__ import annotations

import numpy as np

from calibra.binning import Binning
from calibra.history import HistoryStats


def classic_score(stats: HistoryStats) -> float:
    """K_t = sum_x (n_t(x)/t) ||mean action at x - x|| over used forecasts."""
    if stats.t < 1:
        raise ValueError("classic score undefined at t = 0")
    total = 0.0
    for point, count, err in stats.classic_items():
        total += count * float(np.linalg.norm(err))
    return total / stats.t


def binned_score(stats: HistoryStats, binning: Binning | None = None) -> float:
    """K^Pi_t = sum_i ||g_t(w_i)|| for the binning the stats accumulate."""
    if stats.t < 1:
        raise ValueError("binned score undefined at t = 0")
    if binning is not None and binning is not stats.binning:
        raise ValueError("stats were not accumulated against this binning")
    return float(np.linalg.norm(stats.gaps(), axis=1).sum())


def square_score(stats: HistoryStats, binning: Binning | None = None) -> float:
    """(1/t) X_t with X_t = sum_i n_t(w_i) ||e_t(w_i)||^2."""
    if stats.t < 1:
        raise ValueError("square score undefined at t = 0")
    if binning is not None and binning is not stats.binning:
        raise ValueError("stats were not accumulated against this binning")
    pos = stats.bin_totals > 0
    x_t = float(
        (np.linalg.norm(stats.bin_sums[pos], axis=1) ** 2 / stats.bin_totals[pos]).sum()
    )
    return x_t / stats.t


def sum_squared_gaps(stats: HistoryStats) -> float:
    """S_t / t^2 = sum_i ||g_t(w_i)||^2, the quantity driven to 0 by hedging."""
    if stats.t < 1:
        return 0.0
    return float((np.linalg.norm(stats.gaps(), axis=1) ** 2).sum())


# -- log-based diagnostics ---------------------------------------------------


def gap_of(weight_fn, forecasts: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """g_t(w) evaluated directly from a play record."""
    t = len(forecasts)
    out = np.zeros(forecasts.shape[1])
    for c, a in zip(forecasts, actions):
        out += weight_fn(c) * (a - c)
    return out / t


def error_of(weight_fn, forecasts: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """e_t(w), zero when the total weight n_t(w) vanishes."""
    total, acc = 0.0, np.zeros(forecasts.shape[1])
    for c, a in zip(forecasts, actions):
        w = weight_fn(c)
        total += w
        acc += w * (a - c)
    return acc / total if total > 0 else acc


def _tent_gap_matrix(centers: np.ndarray, lipschitz: float, forecasts: np.ndarray, diffs: np.ndarray):
    """Per-center tent weight totals and weighted error sums, chunked so the
    (centers x periods) distance matrix never exceeds a few MB."""
    totals = np.empty(len(centers))
    sums = np.empty((len(centers), forecasts.shape[1]))
    chunk = max(1, 4_000_000 // max(len(forecasts), 1))
    for lo in range(0, len(centers), chunk):
        hi = min(lo + chunk, len(centers))
        d = np.linalg.norm(forecasts[None, :, :] - centers[lo:hi, None, :], axis=2)
        w = np.maximum(1.0 - lipschitz * d, 0.0)
        totals[lo:hi] = w.sum(axis=1)
        sums[lo:hi] = w @ diffs
    return totals, sums


def smooth_score(stats: HistoryStats, lipschitz: float) -> float:
    """Occupancy-weighted tent-bin errors around each used forecast.

    Uses the admissible family of tents of width 1/lipschitz centered at the
    used forecasts; a lower bound on the supremum over all Lipschitz
    families.
    """
    if lipschitz <= 0:
        raise ValueError("lipschitz bound must be positive")
    forecasts, actions = stats.log_arrays()
    items = list(stats.classic_items())
    centers = np.array([p for p, _, _ in items])
    counts = np.array([n for _, n, _ in items], dtype=float)
    totals, sums = _tent_gap_matrix(centers, lipschitz, forecasts, actions - forecasts)
    errors = np.zeros_like(sums)
    pos = totals > 0
    errors[pos] = sums[pos] / totals[pos, None]
    return float(counts @ np.linalg.norm(errors, axis=1)) / stats.t


def weak_score(stats: HistoryStats, lipschitz: float, family_size: int) -> dict:
    """max ||g_t(w)|| over a finite family of Lipschitz tents plus the
    constant weight; a lower bound on the supremum over all admissible w."""
    forecasts, actions = stats.log_arrays()
    diffs = actions - forecasts
    values = [("constant", float(np.linalg.norm(diffs.mean(axis=0))))]
    if family_size > 0:
        grid = stats.domain.uniform_grid(max(family_size - 1, 1))
        _, sums = _tent_gap_matrix(grid.points, lipschitz, forecasts, diffs)
        norms = np.linalg.norm(sums / stats.t, axis=1)
        for p, v in zip(grid.points, norms):
            values.append((f"tent@{np.round(p, 6)}", float(v)))
    best_name, best = max(values, key=lambda kv: kv[1])
    return {
        "value": best,
        "argmax": best_name,
        "family_size": len(values),
        "lipschitz": lipschitz,
        "lower_bound": True,
    }


def check_lemma_norm_w(stats: HistoryStats, weight_fns: list) -> tuple[bool, float]:
    """Verify sum_j ||g_t(w_j)|| <= sup(sum_j w_j) * K_t; returns (holds, slack).

    The supremum is evaluated over the used forecasts (where it is exact for
    the inequality) plus a dense domain sample.
    """
    forecasts, actions = stats.log_arrays()
    lhs = sum(float(np.linalg.norm(gap_of(w, forecasts, actions))) for w in weight_fns)
    from calibra._rng import make_rng

    sample = np.vstack([forecasts, stats.domain.sample(make_rng(0, 17), 500)])
    sup = max(sum(float(w(p)) for w in weight_fns) for p in sample)
    rhs = sup * classic_score(stats)
    slack = rhs - lhs
    return slack >= -1e-9, slack


def check_log_inequality(stats: HistoryStats, weight_fn) -> dict:
    """Verify sum_{s<=t} w(c_s)^2 / n_s(w) < ln n_t(w) + 2 on the play record.

    Vacuously true (flagged) when the weight never fires.
    """
    forecasts, actions = stats.log_arrays()
    running, acc = 0.0, 0.0
    for c in forecasts:
        w = float(weight_fn(c))
        running += w
        if running > 0:
            acc += w * w / running
    if running == 0.0:
        return {"holds": True, "vacuous": True, "lhs": 0.0, "rhs": 2.0}
    rhs = float(np.log(running) + 2.0)
    return {"holds": acc < rhs, "vacuous": False, "lhs": acc, "rhs": rhs}


def increment_identity_residual(alpha: float, beta: float, u: np.ndarray, v: np.ndarray) -> float:
    """Residual of the one-period update identity behind the square score:

    (a+b) ||(a u + b v)/(a+b)||^2 - a ||u||^2
        = 2 b u.v - b ||u||^2 + b^2/(a+b) ||u - v||^2.
    """
    if alpha < 0 or beta < 0 or alpha + beta == 0:
        raise ValueError("need alpha, beta >= 0 with alpha + beta > 0")
    mix = (alpha * u + beta * v) / (alpha + beta)
    lhs = (alpha + beta) * float(mix @ mix) - alpha * float(u @ u)
    rhs = (
        2.0 * beta * float(u @ v)
        - beta * float(u @ u)
        + beta**2 / (alpha + beta) * float((u - v) @ (u - v))
    )
    return abs(lhs - rhs)
