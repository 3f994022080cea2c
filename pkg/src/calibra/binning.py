"""Weight functions and binnings (partitions of unity) over a forecast domain.

A binning is a finite family of weight functions ``w_i : C -> [0, 1]`` with
``sum_i w_i(c) = 1`` everywhere.  Indicator binnings track each forecast point
separately; normalized-tent binnings smear a forecast over nearby grid points
and are continuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from calibra.domains import TOL_GEOM, Grid, as_point


class WeightFn:
    """A weight function c -> [0, 1] on the domain."""

    continuous: bool = True

    def __call__(self, c) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(WeightFn):
    value: float = 1.0
    continuous: bool = True

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("constant weight must lie in [0, 1]")

    def __call__(self, c) -> float:
        return self.value


@dataclass(frozen=True)
class Indicator(WeightFn):
    """Exact-equality indicator of a single point (bit-pattern match)."""

    center: np.ndarray
    continuous: bool = False

    def __call__(self, c) -> float:
        return 1.0 if np.array_equal(as_point(c), np.asarray(self.center, dtype=float)) else 0.0


@dataclass(frozen=True)
class Tent(WeightFn):
    """w(c) = max(width - ||c - center||, 0) / width: peak 1, support a width-ball."""

    center: np.ndarray
    width: float
    continuous: bool = True

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("tent width must be positive")

    def __call__(self, c) -> float:
        d = float(np.linalg.norm(as_point(c) - np.asarray(self.center, dtype=float)))
        return max(self.width - d, 0.0) / self.width


@dataclass(frozen=True)
class Lipschitz1Tent(WeightFn):
    """w(c) = max(1 - L * ||c - center||, 0): an L-Lipschitz bump with peak 1."""

    center: np.ndarray
    lipschitz: float
    continuous: bool = True

    def __call__(self, c) -> float:
        d = float(np.linalg.norm(as_point(c) - np.asarray(self.center, dtype=float)))
        return max(1.0 - self.lipschitz * d, 0.0)


@dataclass(frozen=True)
class NormalizedTent(WeightFn):
    """One member of a tent partition: tent_i(c) / sum_j tent_j(c)."""

    index: int
    grid_points: np.ndarray  # (n, m)
    width: float
    continuous: bool = True

    def __call__(self, c) -> float:
        lam = _raw_tents(as_point(c), self.grid_points, self.width)
        return float(lam[self.index] / lam.sum())


def _raw_tents(c: np.ndarray, grid_points: np.ndarray, width: float) -> np.ndarray:
    d = np.linalg.norm(grid_points - c[None, :], axis=1)
    return np.maximum(width - d, 0.0)


class Binning:
    """A finite partition of unity.  ``evaluate(c)`` gives all weights at once."""

    def __init__(self, weights: list[WeightFn]):
        if not weights:
            raise ValueError("a binning needs at least one weight function")
        self.weights = list(weights)
        self.continuous = all(w.continuous for w in self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def evaluate(self, c) -> np.ndarray:
        return np.array([w(c) for w in self.weights])

    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        """Weights for many points at once, as rows."""
        return np.array([self.evaluate(p) for p in np.atleast_2d(points)])

    def check_partition_of_unity(self, points: np.ndarray, tol: float = TOL_GEOM) -> float:
        """Max deviation of sum_i w_i from 1 over the given sample points."""
        worst = 0.0
        for p in points:
            worst = max(worst, abs(self.evaluate(p).sum() - 1.0))
        if worst > tol:
            raise ValueError(f"partition of unity violated by {worst}")
        return worst

    def describe(self) -> dict:
        return {"kind": "generic", "size": len(self), "continuous": self.continuous}


class TentBinning(Binning):
    """Normalized tents centered on a grid; continuous by construction."""

    def __init__(self, grid: Grid, width: float):
        if width <= grid.covering_radius:
            raise ValueError(
                f"tent width {width} must exceed the grid covering radius "
                f"{grid.covering_radius}, otherwise the normalizer can vanish"
            )
        self.grid = grid
        self.width = float(width)
        super().__init__(
            [
                NormalizedTent(index=i, grid_points=grid.points, width=self.width)
                for i in range(len(grid))
            ]
        )

    def evaluate(self, c) -> np.ndarray:
        diff = self.grid.points - np.asarray(c, dtype=float).reshape(-1)[None, :]
        lam = self.width - np.sqrt(np.einsum("ij,ij->i", diff, diff))
        np.maximum(lam, 0.0, out=lam)
        return lam / lam.sum()

    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        diff = self.grid.points[None, :, :] - pts[:, None, :]
        lam = self.width - np.sqrt(np.einsum("kij,kij->ki", diff, diff))
        np.maximum(lam, 0.0, out=lam)
        return lam / lam.sum(axis=1, keepdims=True)

    def describe(self) -> dict:
        return {
            "kind": "tents",
            "size": len(self),
            "continuous": True,
            "width": self.width,
            "grid_size": len(self.grid),
        }


class IndicatorBinning(Binning):
    """Point indicators on a grid plus one complement bin for off-grid forecasts.

    The complement bin keeps the family a partition of unity; procedures that
    only ever forecast grid points never put weight into it.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        members: list[WeightFn] = [Indicator(center=p.copy()) for p in grid.points]
        members.append(_GridComplement(grid_points=grid.points))
        super().__init__(members)

    @property
    def n_grid(self) -> int:
        return len(self.grid)

    def evaluate(self, c) -> np.ndarray:
        p = as_point(c, self.grid.domain.m)
        out = np.zeros(len(self.weights))
        hits = np.nonzero((self.grid.points == p[None, :]).all(axis=1))[0]
        if hits.size:
            out[hits[0]] = 1.0
        else:
            out[-1] = 1.0
        return out

    def describe(self) -> dict:
        return {
            "kind": "indicators",
            "size": len(self),
            "continuous": False,
            "grid_size": len(self.grid),
        }


@dataclass(frozen=True)
class _GridComplement(WeightFn):
    grid_points: np.ndarray
    continuous: bool = False

    def __call__(self, c) -> float:
        p = as_point(c)
        return 0.0 if (self.grid_points == p[None, :]).all(axis=1).any() else 1.0


def tent_binning(grid: Grid, width: float) -> TentBinning:
    """Continuous binning of normalized tents on ``grid``.

    Requires ``width`` strictly above the grid's covering radius so that the
    tent normalizer is positive everywhere.
    """
    return TentBinning(grid, width)


def indicator_binning(grid: Grid) -> IndicatorBinning:
    """Indicator binning on the grid points, with a complement bin."""
    return IndicatorBinning(grid)
