"""Dense two-phase simplex for the small feasibility LPs used by the solvers.

Problem sizes here are tens of variables and constraints per call, so a plain
tableau with Bland's rule (no cycling) is simpler and faster than pulling in
an external solver.
"""

from __future__ import annotations

import numpy as np

_PIVOT_TOL = 1e-11


class LPInfeasible(RuntimeError):
    """Phase I ended with a positive artificial objective."""


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= factors[:, None] * T[row][None, :]
    basis[row] = col


def _solve_tableau(T: np.ndarray, basis: np.ndarray, cost: np.ndarray, max_pivots: int) -> float:
    """Minimize cost over the tableau in place; returns the objective.

    Dantzig pricing for speed, falling back to Bland's rule after a while to
    rule out cycling.
    """
    m = T.shape[0]
    bland_after = 10 * (m + T.shape[1])
    for it in range(max_pivots):
        # reduced costs: c_j - c_B . B^-1 A_j
        reduced = cost - cost[basis] @ T[:, :-1]
        reduced[basis] = 0.0
        if it < bland_after:
            col = int(np.argmin(reduced))
            if reduced[col] >= -_PIVOT_TOL:
                break
        else:
            entering = np.nonzero(reduced < -_PIVOT_TOL)[0]
            if entering.size == 0:
                break
            col = int(entering[0])
        ratios = np.full(m, np.inf)
        pos = T[:, col] > _PIVOT_TOL
        ratios[pos] = T[pos, -1] / T[pos, col]
        if not np.isfinite(ratios).any():
            raise RuntimeError("unbounded LP (should not happen for feasibility problems)")
        row = int(np.argmin(ratios))
        _pivot(T, basis, row, col)
    else:
        raise RuntimeError("simplex pivot budget exhausted")
    return float(cost[basis] @ T[:, -1])


def find_feasible(
    A_ub: np.ndarray | None,
    b_ub: np.ndarray | None,
    A_eq: np.ndarray | None,
    b_eq: np.ndarray | None,
    n_vars: int,
    max_pivots: int = 20_000,
) -> np.ndarray:
    """A basic feasible point of {x >= 0, A_ub x <= b_ub, A_eq x = b_eq}.

    Raises LPInfeasible when no such point exists (up to numerical tolerance).
    """
    rows = []
    rhs = []
    n_slack = 0 if A_ub is None else A_ub.shape[0]
    if A_ub is not None:
        ub = np.hstack([A_ub, np.eye(n_slack)])
        rows.append(ub)
        rhs.append(np.asarray(b_ub, dtype=float))
    if A_eq is not None:
        eq = np.hstack([A_eq, np.zeros((A_eq.shape[0], n_slack))])
        rows.append(eq)
        rhs.append(np.asarray(b_eq, dtype=float))
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    m = A.shape[0]

    # Flip rows to get b >= 0, then add one artificial per row.
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    total = n_vars + n_slack
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = np.arange(total, total + m)
    cost = np.concatenate([np.zeros(total), np.ones(m)])

    obj = _solve_tableau(T, basis, cost, max_pivots)
    if obj > 1e-8:
        raise LPInfeasible(f"phase-I objective {obj:.3e} > 0")

    # Drive any lingering artificials out of the basis where possible.
    for i in range(m):
        if basis[i] >= total:
            candidates = np.nonzero(np.abs(T[i, :total]) > _PIVOT_TOL)[0]
            if candidates.size:
                _pivot(T, basis, i, int(candidates[0]))

    x = np.zeros(total + m)
    x[basis] = T[:, -1]
    return np.maximum(x[:n_vars], 0.0)
