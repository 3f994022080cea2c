"""Finite n-player games in strategic form, with a small demo suite."""

from __future__ import annotations

import numpy as np

from calibra.domains import ProductOfSimplices


class GameSpec:
    """Payoff tensors indexed by pure profiles, one dense array per player."""

    def __init__(self, payoffs: list[np.ndarray]):
        payoffs = [np.asarray(u, dtype=float) for u in payoffs]
        if not payoffs:
            raise ValueError("need at least one player")
        shape = payoffs[0].shape
        if len(shape) != len(payoffs):
            raise ValueError(
                f"{len(payoffs)} players but payoff tensors have {len(shape)} axes"
            )
        for u in payoffs:
            if u.shape != shape:
                raise ValueError("payoff tensors must share one shape")
            if not np.all(np.isfinite(u)):
                raise ValueError("payoffs must be finite")
        self.payoffs = payoffs
        self.shapes = tuple(int(s) for s in shape)
        self.n_players = len(payoffs)
        self.payoff_ranges = [(float(u.min()), float(u.max())) for u in payoffs]

    def domain(self) -> ProductOfSimplices:
        """The mixed-strategy profile set, as a product of simplices."""
        return ProductOfSimplices(self.shapes)

    def split(self, x) -> list[np.ndarray]:
        return self.domain().split(x)

    def payoff_vector(self, i: int, blocks: list[np.ndarray]) -> np.ndarray:
        """Player i's payoff for each own pure strategy against blocks[-i]."""
        t = self.payoffs[i]
        for j in range(self.n_players - 1, -1, -1):
            if j != i:
                t = np.tensordot(t, blocks[j], axes=([j], [0]))
        return t

    def expected_payoff(self, i: int, blocks: list[np.ndarray]) -> float:
        return float(blocks[i] @ self.payoff_vector(i, blocks))

    def normalized(self) -> "GameSpec":
        """Per-player affine rescaling of payoffs onto [0, 1]."""
        out = []
        for u, (lo, hi) in zip(self.payoffs, self.payoff_ranges):
            span = hi - lo
            out.append((u - lo) / span if span > 0 else np.zeros_like(u))
        return GameSpec(out)

    # -- JSON wire format ----------------------------------------------------
    # {"shapes": [...], "payoffs": [flat row-major array per player]}

    def to_json_dict(self) -> dict:
        return {
            "shapes": list(self.shapes),
            "payoffs": [u.reshape(-1).tolist() for u in self.payoffs],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GameSpec":
        shapes = tuple(int(s) for s in data["shapes"])
        flat = data["payoffs"]
        if len(flat) != len(shapes):
            raise ValueError("one flattened payoff array per player required")
        return cls([np.asarray(f, dtype=float).reshape(shapes) for f in flat])


def matching_pennies() -> GameSpec:
    u1 = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return GameSpec([u1, -u1])


def prisoners_dilemma() -> GameSpec:
    # Strategy 0 = cooperate, 1 = defect; defection strictly dominates.
    u1 = np.array([[3.0, 0.0], [5.0, 1.0]])
    return GameSpec([u1, u1.T])


def coordination_2x2() -> GameSpec:
    u = np.eye(2)
    return GameSpec([u, u.copy()])


def rock_paper_scissors() -> GameSpec:
    u1 = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    return GameSpec([u1, -u1])


def shapley_3x3() -> GameSpec:
    u1 = np.eye(3)
    u2 = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    return GameSpec([u1, u2])


DEMO_GAMES = {
    "matching_pennies": matching_pennies,
    "prisoners_dilemma": prisoners_dilemma,
    "coordination_2x2": coordination_2x2,
    "rock_paper_scissors": rock_paper_scissors,
    "shapley_3x3": shapley_3x3,
}
