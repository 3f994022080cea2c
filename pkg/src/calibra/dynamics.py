"""Continuously calibrated learning: shared deterministic forecasts on the
mixed-profile space, continuous approximate best replies, sampled play.

Each period every player reads the same forecast c_t (a profile of mixed
strategies), plays the softmax response x_t^i = beta^i(c_t), and a pure
profile a_t is sampled componentwise.  The forecaster hedges on the product
of simplices, so its binned calibration survives the fact that play depends
on the forecast; behaviors then spend most periods near approximate Nash
equilibria.

Payoffs are rescaled per player onto [0, 1] before the response temperature
is set, so epsilon has one scale; all reported gaps use the rescaled game.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from calibra._rng import STREAM_PLAY, make_rng
from calibra.binning import tent_binning
from calibra.domains import ProductOfSimplices
from calibra.games import GameSpec
from calibra.hedging import SolverFailure
from calibra.procedures import FPEngine, checkpoint_times
from calibra.scores import binned_score, classic_score, square_score, sum_squared_gaps


def _normalize_tensor(u: np.ndarray) -> np.ndarray:
    lo, hi = float(u.min()), float(u.max())
    return (u - lo) / (hi - lo) if hi > lo else np.zeros_like(u)


def _make_responder(u_i: np.ndarray, i: int, n_players: int, tau: float):
    """Softmax reply for one player, built from that player's payoffs alone."""
    u = _normalize_tensor(u_i)

    def respond(blocks: list[np.ndarray]) -> np.ndarray:
        t = u
        for j in range(n_players - 1, -1, -1):
            if j != i:
                t = np.tensordot(t, blocks[j], axes=([j], [0]))
        z = t / tau
        z = z - z.max()
        p = np.exp(z)
        return p / p.sum()

    return respond


class SoftmaxResponse:
    """Continuous epsilon-best-reply profile map x -> beta(x).

    The temperature epsilon / max_i ln(m_i) makes the Gibbs suboptimality of
    player i at most epsilon * ln(m_i) / max_j ln(m_j) <= epsilon on the
    rescaled payoffs.  Construction is uncoupled: responder i closes over
    payoff tensor i only.
    """

    def __init__(self, game: GameSpec, epsilon: float):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = float(epsilon)
        self.shapes = game.shapes
        self.domain = ProductOfSimplices(game.shapes)
        max_log = max((np.log(s) for s in game.shapes), default=0.0)
        self.tau = epsilon / max_log if max_log > 0 else epsilon
        self._responders = [
            _make_responder(game.payoffs[i], i, game.n_players, self.tau)
            for i in range(game.n_players)
        ]

    def player(self, i: int, x) -> np.ndarray:
        return self._responders[i](self.domain.split(x))

    def __call__(self, x) -> np.ndarray:
        blocks = self.domain.split(x)
        return np.concatenate([r(blocks) for r in self._responders])


def ne_gap(game: GameSpec, x) -> float:
    """Worst per-player best-reply improvement at the profile x."""
    blocks = game.domain().split(x)
    worst = 0.0
    for i in range(game.n_players):
        v = game.payoff_vector(i, blocks)
        worst = max(worst, float(v.max() - blocks[i] @ v))
    return worst


@dataclass
class Trajectory:
    """One dynamics run: forecasts, behaviors, realized play, gap series."""

    game: dict
    epsilon: float
    seed: int
    horizon: int
    forecasts: np.ndarray  # (T, m)
    behaviors: np.ndarray  # (T, m)
    actions: np.ndarray  # (T, m), unit-vector blocks
    ne_gaps: np.ndarray  # (T,)
    response_dist: np.ndarray  # (T,) ||beta(c_t) - c_t||
    step_violations: np.ndarray  # (T,)
    gap_sq_series: np.ndarray  # (T,) sum_i ||g_t(w_i)||^2
    checkpoints: list
    engine: dict
    completed: int
    aborted: bool = False
    abort_reason: str = ""


def _sample_profile(x: np.ndarray, blocks: list[slice], rng: np.random.Generator) -> np.ndarray:
    a = np.zeros_like(x)
    for sl in blocks:
        p = x[sl]
        idx = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
        a[sl.start + min(idx, (sl.stop - sl.start) - 1)] = 1.0
    return a


def run_dynamics(
    game: GameSpec,
    epsilon: float,
    horizon: int,
    seed: int,
    grid_resolution: int = 4,
    width_factor: float = 2.0,
    tol: float | None = None,
    checkpoints: list[int] | None = None,
) -> Trajectory:
    """Drive continuously calibrated epsilon-learning for ``horizon`` periods.

    All players share one deterministic hedging forecaster on the profile
    space; the binning is normalized tents on the uniform product-simplex
    grid at ``grid_resolution`` points per simplex edge.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    norm_game = game.normalized()
    domain = norm_game.domain()
    grid = domain.uniform_grid(grid_resolution)
    binning = tent_binning(grid, width_factor * grid.covering_radius)
    engine = FPEngine(domain, binning, tol=tol)
    beta = SoftmaxResponse(game, epsilon)
    rng = make_rng(seed, STREAM_PLAY)
    blocks = domain.blocks

    m = domain.m
    forecasts = np.zeros((horizon, m))
    behaviors = np.zeros((horizon, m))
    actions = np.zeros((horizon, m))
    gaps = np.zeros(horizon)
    response_dist = np.zeros(horizon)
    violations = np.zeros(horizon)
    gap_sq = np.zeros(horizon)
    cps = sorted(set(checkpoints)) if checkpoints else checkpoint_times(horizon)
    rows = []
    aborted, reason, completed = False, "", 0
    # parallel accumulator for the mixed-gap variant (behaviors in place of
    # realized actions)
    mixed_sums = np.zeros((len(binning), m))

    for t in range(1, horizon + 1):
        try:
            dist, viol = engine.propose()
        except SolverFailure as exc:
            aborted, reason = True, str(exc)
            break
        c = dist.points[0]  # deterministic forecaster: a point mass
        x = beta(c)
        a = _sample_profile(x, blocks, rng)
        engine.observe(c, a)
        mixed_sums += binning.evaluate(c)[:, None] * (x - c)[None, :]

        k = t - 1
        forecasts[k] = c
        behaviors[k] = x
        actions[k] = a
        gaps[k] = ne_gap(norm_game, x)
        response_dist[k] = float(np.linalg.norm(x - c))
        violations[k] = viol
        gap_sq[k] = sum_squared_gaps(engine.stats)
        completed = t
        if t in cps:
            rows.append(
                {
                    "t": t,
                    "K_classic": classic_score(engine.stats),
                    "K_binned": binned_score(engine.stats),
                    "K_binned_mixed": float(np.linalg.norm(mixed_sums / t, axis=1).sum()),
                    "S_over_t2": float(gap_sq[k]),
                    "X_over_t": square_score(engine.stats),
                    "mean_ne_gap": float(gaps[:t].mean()),
                }
            )

    return Trajectory(
        game=game.to_json_dict(),
        epsilon=epsilon,
        seed=seed,
        horizon=horizon,
        forecasts=forecasts[:completed],
        behaviors=behaviors[:completed],
        actions=actions[:completed],
        ne_gaps=gaps[:completed],
        response_dist=response_dist[:completed],
        step_violations=violations[:completed],
        gap_sq_series=gap_sq[:completed],
        checkpoints=rows,
        engine=engine.describe(),
        completed=completed,
        aborted=aborted,
        abort_reason=reason,
    )


def ne_fraction(trajectory: Trajectory, epsilon_prime: float, window: tuple[int, int] | None = None) -> dict:
    """Fraction of window periods whose behavior is an epsilon'-equilibrium.

    Requires ``epsilon_prime`` strictly above the learning epsilon (the limit
    fraction is one only then).  Also reports the average excess gap over
    epsilon as a proxy for the mean distance to the equilibrium set.
    """
    if not epsilon_prime > trajectory.epsilon:
        raise ValueError(
            f"epsilon_prime {epsilon_prime} must exceed the run's epsilon {trajectory.epsilon}"
        )
    t = trajectory.completed
    lo, hi = window if window is not None else (t // 2, t)
    if not 0 <= lo < hi <= t:
        raise ValueError(f"empty or out-of-range window ({lo}, {hi}) for t={t}")
    gaps = trajectory.ne_gaps[lo:hi]
    return {
        "fraction": float((gaps <= epsilon_prime).mean()),
        "epsilon_prime": epsilon_prime,
        "window": (lo, hi),
        "mean_excess_gap": float(np.maximum(gaps - trajectory.epsilon, 0.0).mean()),
    }


def claim_ii_proxy(trajectory: Trajectory, window: tuple[int, int] | None = None) -> float:
    """Average ||beta(c_s) - c_s|| over the window (default: last half)."""
    t = trajectory.completed
    lo, hi = window if window is not None else (t // 2, t)
    return float(trajectory.response_dist[lo:hi].mean())


def forecast_ne_fraction(trajectory: Trajectory, epsilon_prime: float, window: tuple[int, int] | None = None) -> float:
    """Fraction of window periods whose *forecast* is an epsilon'-equilibrium.

    The forecasts trail the behaviors (they are close for most periods), so
    this mirrors ne_fraction as a companion metric.
    """
    if not epsilon_prime > trajectory.epsilon:
        raise ValueError("epsilon_prime must exceed the run's epsilon")
    t = trajectory.completed
    lo, hi = window if window is not None else (t // 2, t)
    if not 0 <= lo < hi <= t:
        raise ValueError(f"empty or out-of-range window ({lo}, {hi}) for t={t}")
    game = GameSpec.from_json_dict(trajectory.game).normalized()
    gaps = np.array([ne_gap(game, c) for c in trajectory.forecasts[lo:hi]])
    return float((gaps <= epsilon_prime).mean())


def mixed_gap_check(trajectory: Trajectory, weight_fns: list) -> list[dict]:
    """Gap of the behavior sequence and the play-vs-behavior residual per w.

    The residual (1/t) sum w(c_s)(a_s - x_s) is a bounded-increment
    martingale average and should shrink like 1/sqrt(t).
    """
    t = trajectory.completed
    out = []
    for w in weight_fns:
        wc = np.array([float(w(c)) for c in trajectory.forecasts])
        g_mixed = (wc[:, None] * (trajectory.behaviors - trajectory.forecasts)).sum(axis=0) / t
        residual = (wc[:, None] * (trajectory.actions - trajectory.behaviors)).sum(axis=0) / t
        out.append(
            {
                "gap_mixed": g_mixed,
                "residual": residual,
                "gap_mixed_norm": float(np.linalg.norm(g_mixed)),
                "residual_norm": float(np.linalg.norm(residual)),
            }
        )
    return out
