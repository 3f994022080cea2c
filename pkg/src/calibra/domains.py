"""Compact convex forecast domains with closed-form Euclidean projections.

Supported domains: the unit interval, axis-aligned boxes, unit simplices, and
products of unit simplices.  Each domain knows its dimension ``m``, its
diameter ``gamma``, how to project arbitrary points onto itself, and how to
build uniform grids with a certified covering radius.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

#: Global tolerance for geometric assertions (projection inequality,
#: partition of unity, membership checks).
TOL_GEOM = 1e-9


class DimensionMismatchError(ValueError):
    """A point's length does not match the domain dimension."""


class UnsupportedDomainError(ValueError):
    """The requested operation is not available for this domain kind."""


def as_point(z, m: int | None = None) -> np.ndarray:
    """Coerce to a finite float vector, optionally checking its length."""
    p = np.asarray(z, dtype=float).reshape(-1)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite entries: {p}")
    if m is not None and p.shape[0] != m:
        raise DimensionMismatchError(f"expected dimension {m}, got {p.shape[0]}")
    return p


def _project_simplex_block(v: np.ndarray) -> np.ndarray:
    # Sort-and-threshold projection onto {x >= 0, sum x = 1}; O(m log m), exact.
    if v.shape[0] == 2:  # closed form on the segment
        p = 0.5 * (v[0] - v[1] + 1.0)
        p = 0.0 if p < 0.0 else (1.0 if p > 1.0 else p)
        return np.array([p, 1.0 - p])
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


@dataclass(frozen=True)
class Grid:
    """A finite set of domain points with a certified covering radius.

    Every point of the domain lies within ``covering_radius`` of some grid
    point, and ``covering_radius < mesh`` so the grid is a ``mesh``-grid of
    the domain in the strict sense.
    """

    points: np.ndarray  # (n, m)
    mesh: float
    covering_radius: float
    domain: "ConvexDomain"

    def __post_init__(self):
        if not self.covering_radius < self.mesh:
            raise ValueError(
                f"covering radius {self.covering_radius} must be < mesh {self.mesh}"
            )

    def __len__(self) -> int:
        return self.points.shape[0]

    def nearest_index(self, x) -> int:
        d = np.linalg.norm(self.points - as_point(x, self.domain.m), axis=1)
        return int(np.argmin(d))


class ConvexDomain:
    """Base class: a nonempty compact convex subset of R^m."""

    m: int
    diameter: float

    def project(self, z) -> np.ndarray:
        """Closest point of the domain to ``z``."""
        raise NotImplementedError

    def contains(self, x, tol: float = TOL_GEOM) -> bool:
        p = as_point(x, self.m)
        return bool(np.linalg.norm(p - self.project(p)) <= tol)

    def centroid(self) -> np.ndarray:
        raise NotImplementedError

    def extreme_points(self) -> np.ndarray:
        """All extreme points, as rows.  Linear functions attain their max here."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` random points of the domain (rows)."""
        raise NotImplementedError

    def sample_ambient(self, rng: np.random.Generator, n: int, scale: float = 2.0) -> np.ndarray:
        """Random ambient points around the domain, for projection tests."""
        inside = self.sample(rng, n)
        return inside + scale * rng.standard_normal(inside.shape)

    def _build_uniform_grid(self, resolution: int) -> Grid:
        raise NotImplementedError

    def _cache(self, name: str) -> dict:
        store = getattr(self, name, None)
        if store is None:
            store = {}
            object.__setattr__(self, name, store)
        return store

    def uniform_grid(self, resolution: int) -> Grid:
        """Uniform grid at the given resolution (memoized; grids are frozen)."""
        cache = self._cache("_grid_cache")
        g = cache.get(resolution)
        if g is None:
            g = self._build_uniform_grid(resolution)
            cache[resolution] = g
        return g

    def grid_for_covering(self, target: float) -> Grid:
        """A uniform grid whose covering radius is strictly below ``target``."""
        if target <= 0:
            raise ValueError("covering target must be positive")
        cache = self._cache("_cover_cache")
        g = cache.get(target)
        if g is not None:
            return g
        for resolution in range(1, 100_000):
            g = self.uniform_grid(resolution)
            if g.covering_radius < target:
                cache[target] = g
                return g
        raise UnsupportedDomainError(f"cannot cover {self} below {target}")


@dataclass(frozen=True)
class Interval01(ConvexDomain):
    """The unit interval [0, 1] in R^1."""

    m: int = field(default=1, init=False)
    diameter: float = field(default=1.0, init=False)

    def project(self, z) -> np.ndarray:
        return np.clip(as_point(z, 1), 0.0, 1.0)

    def centroid(self) -> np.ndarray:
        return np.array([0.5])

    def extreme_points(self) -> np.ndarray:
        return np.array([[0.0], [1.0]])

    def sample(self, rng, n):
        return rng.random((n, 1))

    def _build_uniform_grid(self, resolution: int) -> Grid:
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        pts = np.linspace(0.0, 1.0, resolution + 1).reshape(-1, 1)
        r0 = 0.5 / resolution
        return Grid(points=pts, mesh=2.0 * r0, covering_radius=r0, domain=self)


@dataclass(frozen=True)
class Box(ConvexDomain):
    """An axis-aligned box prod_i [lo_i, hi_i]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lo)
        hi = as_point(self.hi)
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError("box needs lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "m", lo.shape[0])
        object.__setattr__(self, "diameter", float(np.linalg.norm(hi - lo)))

    def project(self, z) -> np.ndarray:
        return np.clip(as_point(z, self.m), self.lo, self.hi)

    def centroid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def extreme_points(self) -> np.ndarray:
        if self.m > 12:
            raise UnsupportedDomainError("too many box corners to enumerate")
        corners = itertools.product(*[(l, h) for l, h in zip(self.lo, self.hi)])
        return np.array(list(corners), dtype=float)

    def sample(self, rng, n):
        return self.lo + rng.random((n, self.m)) * (self.hi - self.lo)

    def _build_uniform_grid(self, resolution: int) -> Grid:
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        axes = [np.linspace(l, h, resolution + 1) for l, h in zip(self.lo, self.hi)]
        pts = np.array(list(itertools.product(*axes)), dtype=float)
        r0 = 0.5 * float(np.linalg.norm((self.hi - self.lo) / resolution))
        if r0 == 0.0:  # degenerate box (single point)
            return Grid(points=pts, mesh=1.0 / resolution, covering_radius=0.0, domain=self)
        return Grid(points=pts, mesh=2.0 * r0, covering_radius=r0, domain=self)


@dataclass(frozen=True)
class Simplex(ConvexDomain):
    """The unit simplex {x in R^m : x >= 0, sum x = 1}."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("simplex size must be >= 1")
        object.__setattr__(self, "m", self.size)
        object.__setattr__(self, "diameter", float(np.sqrt(2.0)) if self.size >= 2 else 0.0)

    def project(self, z) -> np.ndarray:
        return _project_simplex_block(as_point(z, self.m))

    def centroid(self) -> np.ndarray:
        return np.full(self.m, 1.0 / self.m)

    def extreme_points(self) -> np.ndarray:
        return np.eye(self.m)

    def sample(self, rng, n):
        return rng.dirichlet(np.ones(self.m), size=n)

    def _build_uniform_grid(self, resolution: int) -> Grid:
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        pts = np.array(list(_compositions(resolution, self.m)), dtype=float) / resolution
        r0 = _simplex_covering_radius(self.m, resolution)
        if r0 == 0.0:  # size-1 simplex is a single point
            return Grid(points=pts, mesh=1.0 / resolution, covering_radius=0.0, domain=self)
        return Grid(points=pts, mesh=2.0 * r0, covering_radius=r0, domain=self)


def _simplex_covering_radius(m: int, resolution: int) -> float:
    # Largest-remainder rounding of any simplex point to the lattice
    # {k/resolution} moves each coordinate by < 1/resolution with zero total,
    # giving the worst-case distance sqrt(a*(m-a)/m)/resolution, a = floor(m/2).
    if m == 1:
        return 0.0
    a = m // 2
    return float(np.sqrt(a * (m - a) / m) / resolution)


@dataclass(frozen=True)
class ProductOfSimplices(ConvexDomain):
    """A product of unit simplices, e.g. mixed-strategy profiles of a game.

    Points are the concatenations of the per-block simplex coordinates.
    """

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("need at least one simplex of size >= 1")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "m", sum(sizes))
        diam = float(np.sqrt(sum(2.0 for s in sizes if s >= 2)))
        object.__setattr__(self, "diameter", diam)
        blocks, start = [], 0
        for s in sizes:
            blocks.append(slice(start, start + s))
            start += s
        object.__setattr__(self, "blocks", blocks)

    def split(self, x) -> list[np.ndarray]:
        p = np.asarray(x, dtype=float).reshape(-1)
        return [p[b] for b in self.blocks]

    def project(self, z) -> np.ndarray:
        p = np.asarray(z, dtype=float).reshape(-1)
        if p.shape[0] != self.m:
            raise DimensionMismatchError(f"expected dimension {self.m}, got {p.shape[0]}")
        out = np.empty(self.m)
        for b in self.blocks:
            out[b] = _project_simplex_block(p[b])
        return out

    def centroid(self) -> np.ndarray:
        return np.concatenate([np.full(s, 1.0 / s) for s in self.sizes])

    def extreme_points(self) -> np.ndarray:
        if int(np.prod(self.sizes)) > 4096:
            raise UnsupportedDomainError("too many pure profiles to enumerate")
        blocks = [np.eye(s) for s in self.sizes]
        rows = []
        for combo in itertools.product(*[range(s) for s in self.sizes]):
            rows.append(np.concatenate([blocks[i][j] for i, j in enumerate(combo)]))
        return np.array(rows)

    def sample(self, rng, n):
        parts = [rng.dirichlet(np.ones(s), size=n) for s in self.sizes]
        return np.concatenate(parts, axis=1)

    def _build_uniform_grid(self, resolution: int) -> Grid:
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        block_grids = [Simplex(s).uniform_grid(resolution) for s in self.sizes]
        rows = []
        for combo in itertools.product(*[g.points for g in block_grids]):
            rows.append(np.concatenate(combo))
        pts = np.array(rows)
        r0 = float(np.sqrt(sum(g.covering_radius**2 for g in block_grids)))
        if r0 == 0.0:
            return Grid(points=pts, mesh=1.0 / resolution, covering_radius=0.0, domain=self)
        return Grid(points=pts, mesh=2.0 * r0, covering_radius=r0, domain=self)


def domain_from_config(cfg: dict) -> ConvexDomain:
    """Build a domain from its JSON description."""
    kind = cfg.get("kind")
    if kind == "interval01":
        return Interval01()
    if kind == "box":
        return Box(lo=np.asarray(cfg["lo"], dtype=float), hi=np.asarray(cfg["hi"], dtype=float))
    if kind == "simplex":
        return Simplex(size=int(cfg["size"]))
    if kind == "product_of_simplices":
        return ProductOfSimplices(sizes=tuple(cfg["sizes"]))
    raise UnsupportedDomainError(f"unknown domain kind {kind!r}")
