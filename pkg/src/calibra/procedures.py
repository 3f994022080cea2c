"""Forecasting engines and the repeated forecast/action loop.

Four engines:

- ``FPEngine``        deterministic; each period forecasts an outgoing point
                      of the gap field of a continuous binning (hedging holds
                      surely, so the forecast may be leaked before the action)
- ``MMEngine``        stochastic; mixes grid forecasts via the minimax LP so
                      hedging holds in expectation with slack epsilon
- ``ADEngine``        stochastic but epsilon-local: the mixture comes from a
                      fixed point of the tent-interpolated error field
- ``Binary1DEngine``  the two-case rule for binary outcomes on the grid
                      {0, 1/N, ..., 1}: forecast a zero error if one exists,
                      otherwise mix two adjacent grid points with weights
                      inversely proportional to their errors

``run`` drives an engine against an adversary for T periods, recording the
play, per-step hedging certificates, and checkpoint scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from calibra._rng import STREAM_ADVERSARY, STREAM_FORECAST, make_rng
from calibra.binning import Binning, indicator_binning
from calibra.domains import ConvexDomain, Grid, Interval01
from calibra.hedging import (
    SolverFailure,
    outgoing_almost_det,
    outgoing_fixed_point,
    outgoing_minimax,
)
from calibra.history import HistoryStats
from calibra.mixed import MixedForecast
from calibra.scores import binned_score, classic_score, square_score, sum_squared_gaps


def checkpoint_times(horizon: int) -> list[int]:
    """Powers of two up to the horizon, plus the horizon itself."""
    cps, t = [], 1
    while t < horizon:
        cps.append(t)
        t *= 2
    cps.append(horizon)
    return cps


class ForecastEngine:
    """Shared engine state: a domain, accumulators, and a proposal rule."""

    kind: str = "base"
    deterministic: bool = False

    def __init__(self, domain: ConvexDomain, binning: Binning, keep_log: bool = False, log_cap: int = 1_000_000):
        self.domain = domain
        self.stats = HistoryStats(domain, binning, keep_log=keep_log, log_cap=log_cap)

    def propose(self) -> tuple[MixedForecast, float]:
        """Next forecast distribution and its hedging-condition violation."""
        raise NotImplementedError

    def observe(self, c: np.ndarray, a: np.ndarray) -> None:
        self.stats.update(c, a)

    def describe(self) -> dict:
        return {"kind": self.kind, "binning": self.stats.binning.describe()}

    # per-step bookkeeping hooks
    def step_extras(self) -> dict:
        return {}


class FPEngine(ForecastEngine):
    """Deterministic forecasts: outgoing points of the binned gap field."""

    kind = "fp"
    deterministic = True

    def __init__(self, domain, binning, tol: float | None = None, keep_log: bool = False, log_cap: int = 1_000_000):
        if not binning.continuous:
            raise ValueError("deterministic hedging needs a continuous binning")
        super().__init__(domain, binning, keep_log, log_cap)
        self.tol = tol
        self._warm = None
        self._extremes = domain.extreme_points()

    def _field(self, gaps):
        binning = self.stats.binning

        def phi(c):
            return binning.evaluate(c) @ gaps

        phi.batch = lambda pts: binning.evaluate_batch(pts) @ gaps
        return phi

    def propose(self) -> tuple[MixedForecast, float]:
        gaps = self.stats.gaps()
        if self.stats.t == 0 or not np.any(gaps):
            point = self.domain.centroid()
            self._warm = point
            return MixedForecast.point_mass(point), 0.0
        phi = self._field(gaps)
        point, cert = outgoing_fixed_point(
            phi, self.domain, tol=self.tol, warm_start=self._warm
        )
        self._warm = point
        return MixedForecast.point_mass(point), cert.max_violation


class MMEngine(ForecastEngine):
    """Stochastic grid forecasts from the per-step minimax LP."""

    kind = "mm"
    deterministic = False

    def __init__(self, domain, grid: Grid, epsilon: float, tol: float = 1e-8, keep_log: bool = False, log_cap: int = 1_000_000):
        if not epsilon > grid.covering_radius:
            raise ValueError(
                f"epsilon {epsilon} must exceed the grid covering radius {grid.covering_radius}"
            )
        super().__init__(domain, indicator_binning(grid), keep_log, log_cap)
        self.grid = grid
        self.epsilon = float(epsilon)
        self.tol = tol

    def _grid_errors(self) -> np.ndarray:
        # e_t(1_d) for every grid point; the complement bin is dropped.
        return self.stats.errors()[: len(self.grid)]

    def describe(self) -> dict:
        out = super().describe()
        out["epsilon"] = self.epsilon
        out["grid_size"] = len(self.grid)
        return out

    def propose(self) -> tuple[MixedForecast, float]:
        psi = self._grid_errors()
        eta, cert = outgoing_minimax(psi, self.grid, delta=self.epsilon, tol=self.tol)
        return eta, cert.max_violation


class ADEngine(MMEngine):
    """Almost-deterministic forecasts: epsilon-local mixtures on the grid."""

    kind = "ad"

    def __init__(self, domain, grid: Grid, epsilon: float, tol: float = 1e-8, keep_log: bool = False, log_cap: int = 1_000_000):
        super().__init__(domain, grid, epsilon, tol, keep_log, log_cap)
        self._warm = None

    def propose(self) -> tuple[MixedForecast, float]:
        psi = self._grid_errors()
        eta, cert = outgoing_almost_det(
            psi, self.grid, delta=self.epsilon, tol=self.tol, warm_start=self._warm
        )
        self._warm = eta.mean()
        return eta, cert.max_violation


class Binary1DEngine(ForecastEngine):
    """Binary-outcome forecasting on {0, 1/N, ..., 1}.

    Case 1: some grid point has zero error (unused points count as zero):
    forecast the smallest such point, deterministically.  Case 2: all errors
    are nonzero, so the error crosses zero somewhere; mix the two adjacent
    grid points around the smallest sign change with weights inversely
    proportional to their error magnitudes.  Either way the expected error of
    the forecast is exactly zero.
    """

    kind = "binary1d"
    deterministic = False

    def __init__(self, n_cells: int, keep_log: bool = False, log_cap: int = 1_000_000):
        if n_cells < 1:
            raise ValueError("need at least one grid cell")
        domain = Interval01()
        self.grid = domain.uniform_grid(n_cells)
        super().__init__(domain, indicator_binning(self.grid), keep_log, log_cap)
        self.n_cells = n_cells
        self.counts = np.zeros(n_cells + 1)
        self.rains = np.zeros(n_cells + 1)
        self._last_expected_error = 0.0

    def errors_on_grid(self) -> np.ndarray:
        e = np.zeros(self.n_cells + 1)
        used = self.counts > 0
        e[used] = self.rains[used] / self.counts[used] - self.grid.points[used, 0]
        return e

    def propose(self) -> tuple[MixedForecast, float]:
        e = self.errors_on_grid()
        zeros = np.nonzero(e == 0.0)[0]
        if zeros.size:
            j = int(zeros[0])
            self._last_expected_error = 0.0
            return MixedForecast.point_mass(self.grid.points[j]), 0.0
        # No zero anywhere: e[0] > 0 and e[N] < 0, so a sign change exists.
        j = int(np.nonzero(e < 0.0)[0][0])
        e_hi, e_lo = e[j - 1], e[j]  # e_hi > 0 > e_lo
        p1 = abs(e_lo) / (abs(e_hi) + abs(e_lo))
        p2 = 1.0 - p1
        self._last_expected_error = p1 * e_hi + p2 * e_lo
        eta = MixedForecast(
            self.grid.points[[j - 1, j]], np.array([p1, p2]), locality_radius=0.5 / self.n_cells
        )
        # Hedging slack for the two-point mixture, against both actions.
        slack = 0.5 / self.n_cells
        viol = -np.inf
        for a in (0.0, 1.0):
            lhs = p1 * e_hi * (a - self.grid.points[j - 1, 0]) + p2 * e_lo * (
                a - self.grid.points[j, 0]
            )
            rhs = slack * (p1 * abs(e_hi) + p2 * abs(e_lo))
            viol = max(viol, lhs - rhs)
        return eta, float(viol)

    def observe(self, c, a) -> None:
        super().observe(c, a)
        j = int(round(float(np.asarray(c).reshape(-1)[0]) * self.n_cells))
        self.counts[j] += 1
        self.rains[j] += float(np.asarray(a).reshape(-1)[0])

    def step_extras(self) -> dict:
        return {"expected_error": self._last_expected_error}


@dataclass
class RunRecord:
    """Everything a run produced: the play, certificates, checkpoint scores."""

    engine: dict
    adversary: dict
    horizon: int
    seed: int
    forecasts: np.ndarray
    actions: np.ndarray
    checkpoints: list[dict]
    max_step_violation: float
    max_expected_error: float
    max_locality_radius: float
    max_support_size: int
    completed: int
    aborted: bool = False
    abort_reason: str = ""
    step_violations: np.ndarray | None = None
    gap_sq_series: np.ndarray | None = None

    @property
    def final_scores(self) -> dict:
        return self.checkpoints[-1] if self.checkpoints else {}


def _score_row(t: int, engine: ForecastEngine) -> dict:
    return {
        "t": t,
        "K_classic": classic_score(engine.stats),
        "K_binned": binned_score(engine.stats),
        "S_over_t2": sum_squared_gaps(engine.stats),
        "X_over_t": square_score(engine.stats),
    }


def run(
    engine: ForecastEngine,
    adversary,
    horizon: int,
    seed: int,
    checkpoints: list[int] | None = None,
    record_step_violations: bool = False,
    record_gap_sq_series: bool = False,
) -> RunRecord:
    """Drive engine vs adversary for ``horizon`` periods.

    Leak discipline is structural: the adversary's payload is built from its
    declared information mode, so a history-only adversary is never handed
    the forecast distribution, let alone its realization.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    mode = adversary.mode
    if mode not in ("history-only", "distribution-leak", "realization-leak"):
        raise ValueError(f"unknown information mode {mode!r}")

    rng_forecast = make_rng(seed, STREAM_FORECAST)
    rng_adversary = make_rng(seed, STREAM_ADVERSARY)
    cps = sorted(set(checkpoints)) if checkpoints else checkpoint_times(horizon)

    m = engine.domain.m
    forecasts = np.zeros((horizon, m))
    actions = np.zeros((horizon, m))
    step_viol = np.zeros(horizon) if record_step_violations else None
    gap_series = np.zeros(horizon) if record_gap_sq_series else None
    score_rows: list[dict] = []
    max_viol = -np.inf
    max_expected_error = 0.0
    max_locality = 0.0
    max_support = 1
    aborted, abort_reason, completed = False, "", 0

    for t in range(1, horizon + 1):
        try:
            dist, violation = engine.propose()
        except SolverFailure as exc:
            aborted, abort_reason = True, str(exc)
            break
        c = dist.sample(rng_forecast)
        leak = None
        if mode == "distribution-leak":
            leak = dist
        elif mode == "realization-leak":
            leak = c
        a = adversary.next_action(t, leak, rng_adversary)
        a = np.asarray(a, dtype=float).reshape(-1)
        engine.observe(c, a)
        adversary.observe(c, a)

        forecasts[t - 1] = c
        actions[t - 1] = a
        max_viol = max(max_viol, violation)
        extras = engine.step_extras()
        if "expected_error" in extras:
            max_expected_error = max(max_expected_error, abs(extras["expected_error"]))
        if dist.locality_radius is not None:
            max_locality = max(max_locality, dist.locality_radius)
        max_support = max(max_support, dist.support_size)
        if step_viol is not None:
            step_viol[t - 1] = violation
        if gap_series is not None:
            gap_series[t - 1] = sum_squared_gaps(engine.stats)
        completed = t
        if t in cps:
            score_rows.append(_score_row(t, engine))

    return RunRecord(
        engine=engine.describe(),
        adversary=getattr(adversary, "describe", lambda: {"kind": type(adversary).__name__})(),
        horizon=horizon,
        seed=seed,
        forecasts=forecasts[:completed],
        actions=actions[:completed],
        checkpoints=score_rows,
        max_step_violation=float(max_viol) if completed else 0.0,
        max_expected_error=max_expected_error,
        max_locality_radius=max_locality,
        max_support_size=max_support,
        completed=completed,
        aborted=aborted,
        abort_reason=abort_reason,
        step_violations=None if step_viol is None else step_viol[:completed],
        gap_sq_series=None if gap_series is None else gap_series[:completed],
    )
