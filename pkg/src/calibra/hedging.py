"""Outgoing-point solvers.

A point y of a compact convex set C is *outgoing* for a vector field f when

    f(y) . (x - y) <= 0   for all x in C,

i.e. f vanishes at interior y and points outward at boundary y.  Three
solvers are provided:

- ``outgoing_fixed_point``   deterministic point for a continuous field;
- ``outgoing_minimax``       a mixed point on a grid for an arbitrary field,
                             found by LP feasibility, satisfying the
                             inequality in expectation with slack
                             delta * E||f||;
- ``outgoing_almost_det``    a delta-local mixed point obtained from a fixed
                             point of the tent interpolation of the field.

Every result carries an OutgoingCertificate; acceptance is certificate-based,
never trust-the-solver.  The left side of the inequality is linear in x, so
checking the extreme points of C is exact; a verification grid is swept as
well for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from calibra.domains import ConvexDomain, Grid, Simplex, as_point
from calibra.games import GameSpec
from calibra.lp import LPInfeasible, find_feasible
from calibra.mixed import MixedForecast

TOL_OUTGOING_1D = 1e-8
TOL_OUTGOING_ITER = 1e-6


@dataclass(frozen=True)
class VectorField:
    """A field c -> R^m on the domain, with continuity metadata."""

    fn: object  # callable point -> vector
    continuous: bool = True
    bound: float | None = None  # optional sup ||f||

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(x), dtype=float).reshape(-1)


@dataclass(frozen=True)
class OutgoingCertificate:
    """Worst violation of the outgoing inequality over the verification set."""

    max_violation: float
    tol: float
    n_points: int
    grid_mesh: float  # mesh of the swept verification grid (0 = extremes only)

    @property
    def satisfied(self) -> bool:
        return self.max_violation <= self.tol


class SolverFailure(RuntimeError):
    """Raised when no candidate certifies within the iteration budget."""

    def __init__(self, message: str, candidate=None, certificate: OutgoingCertificate | None = None):
        super().__init__(message)
        self.candidate = candidate
        self.certificate = certificate


def verification_points(domain: ConvexDomain, mesh: float | None = None, cap: int = 5000) -> tuple[np.ndarray, float]:
    """Extreme points plus a uniform grid at most ``mesh`` fine (size-capped).

    The outgoing inequality is linear in x, so the extreme points alone give
    the exact worst case; the grid sweep is reported alongside.
    """
    cache = domain._cache("_verif_cache")
    key = (mesh, cap)
    hit = cache.get(key)
    if hit is not None:
        return hit
    pts = [domain.extreme_points()]
    used_mesh = 0.0
    if mesh is not None and mesh > 0:
        chosen = None
        for resolution in range(2, 200):
            g = domain.uniform_grid(resolution)
            if len(g) > cap:
                break
            chosen = g
            if g.covering_radius < mesh:
                break
        if chosen is not None:
            pts.append(chosen.points)
            used_mesh = chosen.mesh
    result = (np.vstack(pts), used_mesh)
    cache[key] = result
    return result


def _point_violation(fy: np.ndarray, y: np.ndarray, points: np.ndarray) -> float:
    """max_x f(y) . (x - y) over the given x rows."""
    return float((points @ fy).max() - fy @ y)


def _mixture_violation(
    f_vals: np.ndarray, probs: np.ndarray, support: np.ndarray, slack: float, points: np.ndarray
) -> float:
    """max_x E[f(y) . (x - y)] - slack * E||f(y)|| over the given x rows."""
    mean_f = probs @ f_vals
    mean_fy = float(np.einsum("k,km,km->", probs, f_vals, support))
    mean_norm = float(probs @ np.linalg.norm(f_vals, axis=1))
    return float((points @ mean_f).max() - mean_fy - slack * mean_norm)


def certify_point(field, y: np.ndarray, domain: ConvexDomain, tol: float, mesh: float | None = None) -> OutgoingCertificate:
    pts, used_mesh = verification_points(domain, mesh)
    fy = np.asarray(field(y), dtype=float).reshape(-1)
    return OutgoingCertificate(
        max_violation=_point_violation(fy, y, pts),
        tol=tol,
        n_points=pts.shape[0],
        grid_mesh=used_mesh,
    )


def certify_mixture(
    f_vals: np.ndarray,
    mixture: MixedForecast,
    domain: ConvexDomain,
    slack: float,
    tol: float,
    mesh: float | None = None,
) -> OutgoingCertificate:
    pts, used_mesh = verification_points(domain, mesh)
    return OutgoingCertificate(
        max_violation=_mixture_violation(f_vals, mixture.probs, mixture.points, slack, pts),
        tol=tol,
        n_points=pts.shape[0],
        grid_mesh=used_mesh,
    )


# ---------------------------------------------------------------------------
# deterministic outgoing fixed point
# ---------------------------------------------------------------------------


def _solve_segment(
    f_scalar, lo: float, hi: float, tol: float, scan: int = 64, max_iter: int = 120, f_batch=None
) -> float:
    """Outgoing point for a continuous scalar field on [lo, hi].

    Deterministic choice: the smallest valid point.  The left endpoint wins
    when the field already points left there; otherwise the leftmost sign
    crossing found by a left-to-right scan is narrowed down (Illinois-damped
    regula falsi with a bisection safeguard); with no crossing the field
    stays positive and the right endpoint is outgoing.
    """
    span = hi - lo
    f_target = 0.25 * tol / max(span, 1e-300)
    fl = f_scalar(lo)
    if fl <= 0.0:
        return lo
    xs = np.linspace(lo, hi, scan + 1)
    if f_batch is not None:
        fs = f_batch(xs)
        neg = np.nonzero(fs <= 0.0)[0]
        if neg.size == 0:
            return hi
        k = int(neg[0])
        if k == 0:
            return lo
        a, b, fa, fb = float(xs[k - 1]), float(xs[k]), float(fs[k - 1]), float(fs[k])
    else:
        a, fa = lo, fl
        for x in xs[1:]:
            fx = f_scalar(float(x))
            if fx <= 0.0:
                b, fb = float(x), fx
                break
            a, fa = float(x), fx
        else:
            return hi  # field positive across the scan, outgoing at the right end

    # bracket invariant: f(a) > 0 >= f(b)
    if abs(fb) <= f_target:
        return b
    last_side = 0
    for _ in range(max_iter):
        denom = fb - fa
        c = 0.5 * (a + b) if denom == 0.0 else (a * fb - b * fa) / denom
        if not a < c < b:
            c = 0.5 * (a + b)
        fc = f_scalar(c)
        if abs(fc) <= f_target or (b - a) <= 4e-17 * max(1.0, span):
            return c
        if fc > 0.0:
            a, fa = c, fc
            if last_side == +1:
                fb *= 0.5  # Illinois damping against one-sided stalls
            last_side = +1
        else:
            b, fb = c, fc
            if last_side == -1:
                fa *= 0.5
            last_side = -1
    return 0.5 * (a + b)


def _extragradient(field, domain, y0, tol, max_iter, extremes):
    """Projected extragradient steps with diminishing step size."""
    y = domain.project(y0)
    best_y, best_v = y, np.inf
    step0 = max(domain.diameter, 1e-6)
    max_iter = min(max_iter, 80)
    for k in range(1, max_iter + 1):
        fy = field(y)
        viol = _point_violation(fy, y, extremes)
        if viol < best_v:
            best_y, best_v = y, viol
        if viol <= tol:
            return y, viol
        gamma = step0 / np.sqrt(k)
        norm = np.linalg.norm(fy)
        if norm > 0:
            gamma = min(gamma, step0 / norm)
        y_half = domain.project(y + gamma * fy)
        y = domain.project(y + gamma * field(y_half))
    return best_y, best_v


def _normal_map_newton(field, domain, y0, tol, extremes, max_iter=50):
    """Levenberg-Marquardt on the normal map M(z) = P(z) + f(P(z)) - z.

    A root z* gives an exact outgoing point y = P(z*): by the projection
    inequality, the violation of y is bounded by ||M(z)|| * diam(C).  The
    damping handles the kinks the projection and tent weights introduce.
    """
    m = domain.m
    z = y0 + field(y0)

    def M(zv):
        y = domain.project(zv)
        return y + field(y) - zv

    Mz = M(z)
    target = 0.25 * tol / max(domain.diameter, 1e-300)
    lam = 1e-4
    eye = np.eye(m)
    for _ in range(max_iter):
        nrm = np.linalg.norm(Mz)
        if nrm <= target:
            break
        J = np.empty((m, m))
        h = 1e-7 * max(1.0, np.linalg.norm(z))
        for j in range(m):
            dz = np.zeros(m)
            dz[j] = h
            J[:, j] = (M(z + dz) - Mz) / h
        try:
            d = np.linalg.solve(J.T @ J + lam * eye, -J.T @ Mz)
        except np.linalg.LinAlgError:
            lam = min(lam * 10.0, 1e8)
            continue
        M_new = M(z + d)
        if np.linalg.norm(M_new) < nrm:
            z, Mz = z + d, M_new
            lam = max(lam / 3.0, 1e-12)
        else:
            lam = min(lam * 10.0, 1e8)
            if lam >= 1e8:
                break
    y = domain.project(z)
    return y, _point_violation(np.asarray(field(y), float), y, extremes)


def _lex_better(a: np.ndarray, b: np.ndarray) -> bool:
    for xa, xb in zip(a, b):
        if xa < xb - 1e-15:
            return True
        if xa > xb + 1e-15:
            return False
    return False


def _fallback_search(field, domain, tol, extremes, seeds, rounds=40):
    """Grid scan, Newton polish from a spread of starts, then local
    mesh-halving refinement.

    The violation landscape can hide a needle-thin solution basin behind
    shallow boundary basins, so Newton is started both from the
    lowest-violation candidates and from a spatial subsample of the scan.
    """
    candidates = [domain.centroid()] + list(seeds)
    grid_points: list = []
    for resolution in (12, 8, 6, 4, 3, 2, 1):
        try:
            g = domain.uniform_grid(resolution)
        except Exception:
            continue
        if len(g) <= 4000:
            grid_points = list(g.points)
            break
    candidates.extend(grid_points)
    scored = []
    for y in candidates:
        fy = field(y)
        scored.append((_point_violation(fy, y, extremes), y))
    order = sorted(range(len(scored)), key=lambda i: scored[i][0])

    best_v, best_y = scored[order[0]][0], scored[order[0]][1]
    polish_ids = list(order[:16])
    stride = max(1, len(candidates) // 32)
    polish_ids.extend(range(0, len(candidates), stride))
    seen = set()
    for i in polish_ids:
        if i in seen:
            continue
        seen.add(i)
        y = scored[i][1]
        yn, vn = _normal_map_newton(field, domain, y, tol, extremes)
        if vn < best_v - 1e-15 or (abs(vn - best_v) <= 1e-15 and _lex_better(yn, best_y)):
            best_v, best_y = vn, yn
        if best_v <= tol:
            return best_y, best_v

    # Local refinement: shrink a stencil around the incumbent.
    m = domain.m
    stencil = np.vstack([np.eye(m), -np.eye(m), np.ones((1, m)), -np.ones((1, m))])
    h = max(domain.diameter / 4.0, 1e-6)
    for _ in range(rounds):
        trial_pts = [domain.project(best_y + h * s) for s in stencil]
        for y in trial_pts:
            fy = field(y)
            v = _point_violation(fy, y, extremes)
            if v < best_v:
                best_v, best_y = v, y
            yn, vn = _normal_map_newton(field, domain, y, tol, extremes)
            if vn < best_v:
                best_v, best_y = vn, yn
        if best_v <= tol:
            return best_y, best_v
        h *= 0.5
    return best_y, best_v


def outgoing_fixed_point(
    field,
    domain: ConvexDomain,
    tol: float | None = None,
    max_iter: int = 300,
    warm_start=None,
    extra_starts: list | None = None,
) -> tuple[np.ndarray, OutgoingCertificate]:
    """Point y in the domain with f(y) . (x - y) <= tol for all x in C.

    Strategy: closed-form scan/bisection in one dimension; otherwise
    projected extragradient iteration with diminishing steps, then a
    grid-scan + normal-map-Newton fallback.  Raises SolverFailure with the
    best candidate when nothing certifies.
    """
    f = field if isinstance(field, VectorField) else VectorField(field)
    if tol is None:
        tol = TOL_OUTGOING_1D if domain.m == 1 or isinstance(domain, Simplex) and domain.m == 2 else TOL_OUTGOING_ITER
    extremes = domain.extreme_points()

    raw_batch = getattr(f.fn, "batch", None)

    def _gate(y: np.ndarray) -> tuple[np.ndarray, OutgoingCertificate]:
        cert = certify_point(f, y, domain, tol)
        if not cert.satisfied:
            raise SolverFailure(
                f"no outgoing point certified within tol={tol} "
                f"(best violation {cert.max_violation:.3e})",
                candidate=y,
                certificate=cert,
            )
        return y, cert

    if domain.m == 1:
        lo, hi = float(extremes.min()), float(extremes.max())
        if hi - lo <= 0:
            return _gate(np.array([lo]))
        base = f.fn
        f_batch = None
        if raw_batch is not None:
            f_batch = lambda ps: np.asarray(raw_batch(ps.reshape(-1, 1)), float).reshape(-1)
        y_val = _solve_segment(
            lambda p: float(np.asarray(base(np.array([p]))).reshape(-1)[0]), lo, hi, tol, f_batch=f_batch
        )
        return _gate(np.array([y_val]))

    if isinstance(domain, Simplex) and domain.m == 2:
        # The 2-simplex is a segment: reduce to the scalar problem in p where
        # y = (p, 1 - p) and the effective field is f_1 - f_2.
        def f_scalar(p):
            v = f(np.array([p, 1.0 - p]))
            return float(v[0] - v[1])

        f_batch = None
        if raw_batch is not None:
            def f_batch(ps):
                vals = np.asarray(raw_batch(np.column_stack([ps, 1.0 - ps])), float)
                return vals[:, 0] - vals[:, 1]

        p = _solve_segment(f_scalar, 0.0, 1.0, tol, f_batch=f_batch)
        return _gate(np.array([p, 1.0 - p]))

    y0 = domain.project(as_point(warm_start, domain.m)) if warm_start is not None else domain.centroid()

    # Warm start may already certify (fields drift slowly between periods).
    fy0 = f(y0)
    if _point_violation(fy0, y0, extremes) <= tol:
        return y0, certify_point(f, y0, domain, tol)

    y, viol = _normal_map_newton(f, domain, y0, tol, extremes)
    if viol <= tol:
        return y, certify_point(f, y, domain, tol)

    y2, viol2 = _extragradient(f, domain, y0, tol, max_iter, extremes)
    if viol2 < viol:
        y, viol = y2, viol2
    if viol <= tol:
        return y, certify_point(f, y, domain, tol)
    y3, viol3 = _normal_map_newton(f, domain, y2, tol, extremes)
    if viol3 < viol:
        y, viol = y3, viol3
    if viol <= tol:
        return y, certify_point(f, y, domain, tol)

    seeds = [y] + ([domain.project(as_point(s, domain.m)) for s in extra_starts] if extra_starts else [])
    y, viol = _fallback_search(f, domain, tol, extremes, seeds)
    cert = certify_point(f, y, domain, tol)
    if not cert.satisfied:
        raise SolverFailure(
            f"no outgoing point certified within tol={tol} (best violation {cert.max_violation:.3e})",
            candidate=y,
            certificate=cert,
        )
    return y, cert


# ---------------------------------------------------------------------------
# stochastic outgoing points
# ---------------------------------------------------------------------------


def caratheodory_weights(
    vectors: np.ndarray, weights: np.ndarray, max_support: int | None = None
) -> tuple[np.ndarray, bool]:
    """Same-length weight vector with at most dim + 1 positive entries and the
    same weighted mean; (original weights, False) on numerical degeneracy."""
    V = np.asarray(vectors, dtype=float)
    w0 = np.asarray(weights, dtype=float)
    w = w0.copy()
    k = V.shape[1]
    target = k + 1 if max_support is None else max_support
    mean0 = w @ V
    scale = max(1.0, float(np.abs(V).max()))

    while int((w > 0).sum()) > target:
        active = np.nonzero(w > 0)[0]
        A = np.vstack([V[active].T, np.ones(len(active))])
        _, _, vt = np.linalg.svd(A, full_matrices=True)
        lam = vt[-1]
        if np.linalg.norm(A @ lam) > 1e-8:
            return w0, False
        if not np.any(lam > 1e-14):
            lam = -lam
        pos = lam > 1e-14
        if not pos.any():
            return w0, False
        ratios = w[active][pos] / lam[pos]
        theta = ratios.min()
        w[active] = w[active] - theta * lam
        w[active[pos][np.argmin(ratios)]] = 0.0
        w = np.where(np.abs(w) < 1e-15, 0.0, w)

    keep = w > 0
    total = w[keep].sum()
    if total <= 0:
        return w0, False
    w = w / total
    if np.linalg.norm(w @ V - mean0) > 1e-9 * scale or np.any(w < 0):
        return w0, False
    return w, True


def caratheodory_reduce(
    vectors: np.ndarray, weights: np.ndarray, max_support: int | None = None
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Prune a convex combination to at most dim + 1 atoms with the same mean.

    Returns (vectors, weights, ok); on numerical degeneracy the input support
    is returned unreduced with ok=False.
    """
    w, ok = caratheodory_weights(vectors, weights, max_support)
    if not ok:
        return np.asarray(vectors, float), np.asarray(weights, float), False
    keep = w > 0
    return np.asarray(vectors, float)[keep], w[keep], True


def outgoing_minimax(
    f_values: np.ndarray,
    grid: Grid,
    delta: float,
    tol: float = TOL_OUTGOING_1D,
) -> tuple[MixedForecast, OutgoingCertificate]:
    """Mixed point eta on the grid with E[f(y).(x-y)] <= delta E||f(y)||.

    Solved as the LP feasibility problem from the minimax construction: with
    delta0 the grid covering radius and B a (delta - delta0)-grid of C, find
    eta >= 0, sum eta = 1, with E[f(y).(b-y) - delta0 ||f(y)||] <= 0 for all
    b in B.  Feasibility is guaranteed for delta > delta0; an infeasible LP
    therefore signals a grid bookkeeping bug and raises SolverFailure.
    Support is reduced to at most m + 3 atoms.
    """
    domain = grid.domain
    D = grid.points
    F = np.asarray(f_values, dtype=float)
    if F.shape != D.shape:
        raise ValueError(f"field values {F.shape} must align with grid {D.shape}")
    delta0 = grid.covering_radius
    if not delta > delta0:
        raise ValueError(f"delta={delta} must exceed the grid covering radius {delta0}")

    norms = np.linalg.norm(F, axis=1)
    if norms.max() == 0.0:
        eta = MixedForecast.point_mass(D[0])
        eta._field_values = F[:1]
        return eta, certify_mixture(F[:1], eta, domain, delta, tol, mesh=delta / 4)

    B = domain.grid_for_covering(delta - delta0).points
    # constraint rows: for each b, sum_d eta_d [f_d.(b - d) - delta0 ||f_d||] <= 0
    A_ub = B @ F.T - (np.einsum("dm,dm->d", F, D) + delta0 * norms)[None, :]
    try:
        eta_w = find_feasible(
            A_ub=A_ub,
            b_ub=np.zeros(A_ub.shape[0]),
            A_eq=np.ones((1, len(D))),
            b_eq=np.array([1.0]),
            n_vars=len(D),
        )
    except LPInfeasible as exc:
        raise SolverFailure(
            f"minimax LP infeasible for delta={delta}, delta0={delta0}, "
            f"|D|={len(D)}, |B|={len(B)}: {exc}"
        ) from exc

    keep = eta_w > 1e-12
    pts, fv, w = D[keep], F[keep], eta_w[keep] / eta_w[keep].sum()

    # Reduce support preserving (f, f.y, ||f||) moments, so the certified
    # inequality is untouched for every x.
    moments = np.hstack(
        [fv, np.einsum("km,km->k", fv, pts)[:, None], np.linalg.norm(fv, axis=1)[:, None]]
    )
    w_red, ok = caratheodory_weights(moments, w, max_support=domain.m + 3)
    if ok:
        keep2 = w_red > 0
        pts, fv, w = pts[keep2], fv[keep2], w_red[keep2]

    eta = MixedForecast(pts, w)
    # MixedForecast sorts its support; align the field values before any use.
    order = np.lexsort(pts.T[::-1])
    eta._field_values = fv[order]  # stashed for per-step certificate reuse
    cert = certify_mixture(eta._field_values, eta, domain, delta, tol, mesh=delta / 4)
    if not cert.satisfied:
        raise SolverFailure(
            f"minimax certificate violation {cert.max_violation:.3e} > tol {tol}",
            candidate=eta,
            certificate=cert,
        )
    return eta, cert


def tent_interpolate(f_values: np.ndarray, grid: Grid, width: float):
    """Continuous extension of grid field values by normalized tent weights."""
    D = grid.points
    F = np.asarray(f_values, dtype=float)

    def f_tilde(x):
        diff = D - np.asarray(x, dtype=float).reshape(-1)[None, :]
        lam = width - np.sqrt(np.einsum("ij,ij->i", diff, diff))
        np.maximum(lam, 0.0, out=lam)
        total = lam.sum()
        if total <= 0.0:
            raise ValueError("tent interpolation undefined: point farther than width from the grid")
        return (lam @ F) / total

    def batch(xs):
        pts = np.atleast_2d(np.asarray(xs, dtype=float))
        diff = D[None, :, :] - pts[:, None, :]
        lam = width - np.sqrt(np.einsum("kij,kij->ki", diff, diff))
        np.maximum(lam, 0.0, out=lam)
        return (lam @ F) / lam.sum(axis=1, keepdims=True)

    f_tilde.batch = batch
    return f_tilde


def outgoing_almost_det(
    f_values: np.ndarray,
    grid: Grid,
    delta: float,
    tol: float = TOL_OUTGOING_1D,
    warm_start=None,
) -> tuple[MixedForecast, OutgoingCertificate]:
    """delta-local mixed point on the grid via a fixed point of the
    tent-interpolated field.

    The mixture is the tent weights at an outgoing point z of the
    interpolation, so E[f(y)] equals the interpolated field at z exactly,
    the support lies in the closed delta-ball around z, and Caratheodory
    reduction brings it to at most m + 1 atoms.
    """
    domain = grid.domain
    D = grid.points
    F = np.asarray(f_values, dtype=float)
    if F.shape != D.shape:
        raise ValueError(f"field values {F.shape} must align with grid {D.shape}")
    delta0 = grid.covering_radius
    if not delta > delta0:
        raise ValueError(f"delta={delta} must exceed the grid covering radius {delta0}")

    if np.linalg.norm(F, axis=1).max() == 0.0:
        eta = MixedForecast.point_mass(D[0])
        eta._field_values = F[:1]
        return eta, certify_mixture(F[:1], eta, domain, delta, tol, mesh=delta / 4)

    f_tilde = tent_interpolate(F, grid, delta)
    z, _ = outgoing_fixed_point(f_tilde, domain, tol=tol, warm_start=warm_start)

    lam = np.maximum(delta - np.linalg.norm(D - z[None, :], axis=1), 0.0)
    probs = lam / lam.sum()
    keep = probs > 0
    pts, fv, w = D[keep], F[keep], probs[keep]

    target = f_tilde(z)
    w_red, ok = caratheodory_weights(fv, w, max_support=domain.m + 1)
    if ok:
        keep2 = w_red > 0
        pts, fv, w = pts[keep2], fv[keep2], w_red[keep2]

    mean_f = w @ fv
    if np.linalg.norm(mean_f - target) > 1e-9 * max(1.0, np.abs(F).max()):
        raise SolverFailure(
            f"interpolated-field mean drifted by {np.linalg.norm(mean_f - target):.3e}"
        )

    eta = MixedForecast(pts, w, locality_radius=delta)
    order = np.lexsort(pts.T[::-1])
    eta._field_values = fv[order]
    cert = certify_mixture(eta._field_values, eta, domain, delta, tol, mesh=delta / 4)
    if not cert.satisfied:
        raise SolverFailure(
            f"almost-deterministic certificate violation {cert.max_violation:.3e} > tol {tol}",
            candidate=eta,
            certificate=cert,
        )
    return eta, cert


# ---------------------------------------------------------------------------
# Nash equilibria from outgoing points
# ---------------------------------------------------------------------------


def nash_field(game: GameSpec):
    """The stacked best-payoff field whose outgoing points are equilibria."""
    domain = game.domain()

    def f(x):
        blocks = domain.split(x)
        return np.concatenate([game.payoff_vector(i, blocks) for i in range(game.n_players)])

    return f, domain


def best_reply_gaps(game: GameSpec, x) -> np.ndarray:
    """Per-player improvement available against the profile x."""
    blocks = game.domain().split(x)
    gaps = []
    for i in range(game.n_players):
        v = game.payoff_vector(i, blocks)
        gaps.append(float(v.max() - blocks[i] @ v))
    return np.array(gaps)


def nash_via_outgoing(game: GameSpec, tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray, OutgoingCertificate]:
    """Approximate Nash equilibrium as an outgoing point of the payoff field.

    Returns (profile, per-player best-reply gaps, certificate).  Each gap is
    bounded by the certified violation, so a tol-certificate means a
    tol-equilibrium.
    """
    f, domain = nash_field(game)
    starts = list(domain.extreme_points()[:32])
    try:
        g = domain.uniform_grid(2)
        if len(g) <= 128:
            starts.extend(list(g.points))
    except Exception:
        pass
    y, cert = outgoing_fixed_point(f, domain, tol=tol, extra_starts=starts)
    return y, best_reply_gaps(game, y), cert
