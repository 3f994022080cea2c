"""Action-sequence generators, from oblivious to adaptive to leaky.

Each adversary declares an information mode; the run loop builds its payload
accordingly, so access control is structural:

- ``history-only``       sees past (c_s, a_s) pairs via observe() only
- ``distribution-leak``  additionally sees this period's forecast
                         distribution, never its realization
- ``realization-leak``   sees the realized forecast before acting
"""

from __future__ import annotations

import numpy as np

from calibra.binning import tent_binning
from calibra.domains import ConvexDomain


class Adversary:
    mode: str = "history-only"

    def next_action(self, t: int, leak, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def observe(self, c: np.ndarray, a: np.ndarray) -> None:
        pass

    def describe(self) -> dict:
        return {"kind": type(self).__name__, "mode": self.mode}


class Fixed(Adversary):
    """An oblivious sequence, cycled when shorter than the horizon."""

    mode = "history-only"

    def __init__(self, sequence):
        seq = np.atleast_2d(np.asarray(sequence, dtype=float))
        if seq.shape[0] == 1 and seq.shape[1] > 1:
            seq = seq.T  # a flat list means scalar actions over time
        self.sequence = seq

    def next_action(self, t, leak, rng):
        return self.sequence[(t - 1) % len(self.sequence)]

    def describe(self):
        return {"kind": "fixed", "mode": self.mode, "length": len(self.sequence)}


class IIDBernoulli(Adversary):
    """Binary action 1 with probability p, independently each period."""

    mode = "history-only"

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.p = float(p)

    def next_action(self, t, leak, rng):
        return np.array([1.0 if rng.random() < self.p else 0.0])

    def describe(self):
        return {"kind": "iid_bernoulli", "mode": self.mode, "p": self.p}


class WorstCaseGrid(Adversary):
    """Rain with probability 1/(2N): pins the binary grid procedure at its
    calibration floor."""

    mode = "history-only"

    def __init__(self, n_cells: int):
        if n_cells < 1:
            raise ValueError("need n_cells >= 1")
        self.n_cells = int(n_cells)
        self.p = 1.0 / (2 * n_cells)

    def next_action(self, t, leak, rng):
        return np.array([1.0 if rng.random() < self.p else 0.0])

    def describe(self):
        return {"kind": "worst_case_grid", "mode": self.mode, "N": self.n_cells}


class ThresholdLeaky(Adversary):
    """Rain exactly when the (leaked) chance of rain is below the threshold.

    In realization-leak mode the rule reads the realized forecast; in
    distribution-leak mode it reads the announced distribution's mean.
    Classic calibration breaks against the realization leak; deterministic
    hedging does not care.
    """

    def __init__(self, threshold: float = 0.5, mode: str = "realization-leak"):
        if mode not in ("realization-leak", "distribution-leak"):
            raise ValueError("ThresholdLeaky needs a leak mode")
        self.threshold = float(threshold)
        self.mode = mode

    def next_action(self, t, leak, rng):
        if leak is None:
            raise ValueError("leak payload missing for a leaky adversary")
        value = float(leak[0]) if self.mode == "realization-leak" else float(leak.mean()[0])
        return np.array([1.0 if value < self.threshold else 0.0])

    def describe(self):
        return {"kind": "threshold_leaky", "mode": self.mode, "threshold": self.threshold}


class AntiGap(Adversary):
    """Greedy score attacker: picks the extreme action that would grow the
    squared-gap sum of its own reference binning the most.

    The forecast is unknown under history-only information, so the lookahead
    plugs in the previous realized forecast (domain centroid at the start);
    under distribution-leak it averages over the announced support.
    """

    def __init__(self, domain: ConvexDomain, resolution: int = 10, mode: str = "history-only"):
        if mode not in ("history-only", "distribution-leak"):
            raise ValueError("AntiGap supports history-only or distribution-leak")
        self.mode = mode
        self.domain = domain
        grid = domain.uniform_grid(resolution)
        self.binning = tent_binning(grid, 2.0 * grid.covering_radius)
        self.sums = np.zeros((len(self.binning), domain.m))
        self._last_c = None
        self.resolution = resolution

    def _increase(self, c: np.ndarray, a: np.ndarray) -> float:
        w = self.binning.evaluate(c)
        new = self.sums + w[:, None] * (a - c)[None, :]
        return float((new**2).sum() - (self.sums**2).sum())

    def next_action(self, t, leak, rng):
        candidates = self.domain.extreme_points()
        best_a, best_gain = candidates[0], -np.inf
        for a in candidates:
            if self.mode == "distribution-leak" and leak is not None:
                gain = sum(
                    p * self._increase(y, a) for y, p in zip(leak.points, leak.probs)
                )
            else:
                guess = self._last_c if self._last_c is not None else self.domain.centroid()
                gain = self._increase(guess, a)
            if gain > best_gain:
                best_a, best_gain = a, gain
        return best_a.copy()

    def observe(self, c, a):
        w = self.binning.evaluate(c)
        self.sums += w[:, None] * (np.asarray(a, dtype=float) - c)[None, :]
        self._last_c = np.asarray(c, dtype=float).copy()

    def describe(self):
        return {"kind": "anti_gap", "mode": self.mode, "resolution": self.resolution}


def adversary_from_config(cfg: dict, domain: ConvexDomain) -> Adversary:
    kind = cfg.get("kind")
    if kind == "fixed":
        return Fixed(cfg["sequence"])
    if kind == "iid_bernoulli":
        return IIDBernoulli(float(cfg["p"]))
    if kind == "worst_case_grid":
        return WorstCaseGrid(int(cfg["N"]))
    if kind == "threshold_leaky":
        return ThresholdLeaky(
            threshold=float(cfg.get("threshold", 0.5)),
            mode=cfg.get("mode", "realization-leak"),
        )
    if kind == "anti_gap":
        return AntiGap(
            domain,
            resolution=int(cfg.get("resolution", 10)),
            mode=cfg.get("mode", "history-only"),
        )
    raise ValueError(f"unknown adversary kind {kind!r}")
