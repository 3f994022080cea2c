"""Incremental accumulators for a forecast/action record.

For a binning (w_i) and a play record (c_s, a_s), tracks

- the bin weight totals        n_t(w_i) = sum_s w_i(c_s)
- the unnormalized bin sums    t * g_t(w_i) = sum_s w_i(c_s) (a_s - c_s)
- the exact-forecast tally     n_t(x), sum of a_s over periods with c_s == x

from which per-period gaps g_t, bin errors e_t, and all calibration scores
are computed.  A full (c_s, a_s) log is optional and capacity-capped; scores
never require it, only the smooth/weak diagnostics do.
"""

from __future__ import annotations

import numpy as np

from calibra.binning import Binning
from calibra.domains import ConvexDomain, as_point


class HistoryStats:
    """Single-owner mutable accumulator; copy() gives an independent snapshot."""

    def __init__(
        self,
        domain: ConvexDomain,
        binning: Binning,
        keep_log: bool = False,
        log_cap: int = 1_000_000,
    ):
        self.domain = domain
        self.binning = binning
        self.t = 0
        self.bin_totals = np.zeros(len(binning))  # n_t(w_i)
        self.bin_sums = np.zeros((len(binning), domain.m))  # t * g_t(w_i)
        self.classic: dict[bytes, list] = {}  # key -> [point, count, action_sum]
        self.keep_log = keep_log
        self.log_cap = log_cap
        self._log_c: list[np.ndarray] = []
        self._log_a: list[np.ndarray] = []

    def copy(self) -> "HistoryStats":
        out = HistoryStats(self.domain, self.binning, self.keep_log, self.log_cap)
        out.t = self.t
        out.bin_totals = self.bin_totals.copy()
        out.bin_sums = self.bin_sums.copy()
        out.classic = {k: [v[0].copy(), v[1], v[2].copy()] for k, v in self.classic.items()}
        out._log_c = [c.copy() for c in self._log_c]
        out._log_a = [a.copy() for a in self._log_a]
        return out

    def update(self, c, a) -> None:
        """Record one period.  ``a`` must lie in the domain (actions A <= C)."""
        c = as_point(c, self.domain.m)
        a = as_point(a, self.domain.m)
        w = self.binning.evaluate(c)
        self.t += 1
        self.bin_totals += w
        self.bin_sums += w[:, None] * (a - c)[None, :]
        key = c.tobytes()
        entry = self.classic.get(key)
        if entry is None:
            self.classic[key] = [c.copy(), 1, a.copy()]
        else:
            entry[1] += 1
            entry[2] = entry[2] + a
        if self.keep_log and len(self._log_c) < self.log_cap:
            self._log_c.append(c)
            self._log_a.append(a)

    # -- gaps and errors ---------------------------------------------------

    def gaps(self) -> np.ndarray:
        """g_t(w_i) as rows; zero at t = 0."""
        if self.t == 0:
            return np.zeros_like(self.bin_sums)
        return self.bin_sums / self.t

    def errors(self) -> np.ndarray:
        """e_t(w_i) as rows, with e_t(w) = 0 whenever n_t(w) = 0."""
        out = np.zeros_like(self.bin_sums)
        pos = self.bin_totals > 0
        out[pos] = self.bin_sums[pos] / self.bin_totals[pos, None]
        return out

    def classic_items(self):
        """(point, count, mean-action-error) for every forecast used so far."""
        for point, count, action_sum in self.classic.values():
            yield point, count, action_sum / count - point

    # -- optional raw log --------------------------------------------------

    @property
    def has_log(self) -> bool:
        return self.keep_log and len(self._log_c) == self.t

    def log_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.has_log:
            raise ValueError("full (c, a) log was not retained")
        return np.array(self._log_c), np.array(self._log_a)


def replay(
    domain: ConvexDomain,
    binning: Binning,
    forecasts: np.ndarray,
    actions: np.ndarray,
    keep_log: bool = False,
) -> HistoryStats:
    """Accumulate a recorded (c, a) series into fresh stats under ``binning``."""
    stats = HistoryStats(domain, binning, keep_log=keep_log, log_cap=len(forecasts))
    for c, a in zip(forecasts, actions):
        stats.update(c, a)
    return stats
