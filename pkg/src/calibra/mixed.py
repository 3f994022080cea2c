"""Finitely supported mixed forecasts with locality metadata."""

from __future__ import annotations

import numpy as np

from calibra.domains import TOL_GEOM, as_point


class MixedForecast:
    """A probability distribution over finitely many forecast points.

    The support is kept sorted lexicographically so inverse-CDF sampling is
    deterministic given the generator state.  ``locality_radius`` is the
    claimed radius of a closed ball containing the support (None = unbounded).
    """

    def __init__(self, points, probs, locality_radius: float | None = None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        p = np.asarray(probs, dtype=float).reshape(-1)
        if pts.shape[0] != p.shape[0]:
            raise ValueError("points and probabilities must align")
        if np.any(p < -TOL_GEOM):
            raise ValueError(f"negative probability in {p}")
        if abs(p.sum() - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        keep = p > 0.0
        pts, p = pts[keep], np.maximum(p[keep], 0.0)
        order = np.lexsort(pts.T[::-1])  # sort rows lexicographically
        self.points = pts[order]
        self.probs = p[order] / p[order].sum()
        self.locality_radius = locality_radius
        if locality_radius is not None:
            diam = self.support_diameter()
            if diam > 2.0 * locality_radius + TOL_GEOM:
                raise ValueError(
                    f"support diameter {diam} exceeds 2 * locality radius {locality_radius}"
                )

    @classmethod
    def point_mass(cls, point) -> "MixedForecast":
        return cls(as_point(point)[None, :], np.array([1.0]), locality_radius=0.0)

    @property
    def support_size(self) -> int:
        return self.points.shape[0]

    def support_diameter(self) -> float:
        if self.support_size == 1:
            return 0.0
        d = self.points[:, None, :] - self.points[None, :, :]
        return float(np.sqrt((d**2).sum(axis=2)).max())

    def mean(self) -> np.ndarray:
        return self.probs @ self.points

    def expectation(self, values: np.ndarray) -> np.ndarray:
        """E[v(y)] for per-support-point values (rows aligned with points)."""
        return self.probs @ np.asarray(values, dtype=float)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draw over the sorted support."""
        if self.support_size == 1:
            return self.points[0].copy()
        u = rng.random()
        idx = int(np.searchsorted(np.cumsum(self.probs), u, side="right"))
        return self.points[min(idx, self.support_size - 1)].copy()
