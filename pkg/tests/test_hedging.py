import numpy as np
import pytest

from calibra._rng import make_rng
from calibra.domains import Box, Interval01, ProductOfSimplices, Simplex
from calibra.games import matching_pennies, prisoners_dilemma, rock_paper_scissors
from calibra.hedging import (
    SolverFailure,
    caratheodory_reduce,
    certify_mixture,
    nash_via_outgoing,
    outgoing_almost_det,
    outgoing_fixed_point,
    outgoing_minimax,
    tent_interpolate,
)

DOMAINS_M3 = [
    Interval01(),
    Box(lo=[0, 0], hi=[1, 1]),
    Simplex(2),
    Simplex(3),
    ProductOfSimplices((2, 1)),
]


def exhaustive_violation(field, y, domain, n=4000, seed=77):
    """Oracle: worst f(y).(x-y) over a dense random sample plus extremes."""
    rng = make_rng(seed, 5)
    xs = np.vstack([domain.sample(rng, n), domain.extreme_points()])
    fy = np.asarray(field(y), dtype=float)
    return float((xs @ fy).max() - fy @ y)


# -- outgoing_fixed_point ----------------------------------------------------


def test_fp_interior_zero():
    domain = Interval01()
    y, cert = outgoing_fixed_point(lambda x: np.array([0.5 - x[0]]), domain)
    assert y[0] == pytest.approx(0.5, abs=1e-8)
    assert cert.satisfied


def test_fp_boundary_outgoing():
    domain = Interval01()
    y, cert = outgoing_fixed_point(lambda x: np.array([1.0]), domain)
    assert y[0] == 1.0
    assert cert.max_violation <= 0.0 + 1e-12


def test_fp_lower_boundary():
    y, cert = outgoing_fixed_point(lambda x: np.array([-1.0]), Interval01())
    assert y[0] == 0.0
    assert cert.satisfied


def test_fp_rock_paper_scissors_field():
    # Skew-symmetric field Bx on the simplex: the unique outgoing point is
    # the barycenter.
    B = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    domain = Simplex(3)
    y, cert = outgoing_fixed_point(lambda x: B @ x, domain, tol=1e-9)
    assert np.allclose(y, [1 / 3, 1 / 3, 1 / 3], atol=1e-6)
    assert cert.max_violation <= 1e-9
    assert exhaustive_violation(lambda x: B @ x, y, domain) <= 1e-9


@pytest.mark.parametrize("domain", DOMAINS_M3, ids=lambda d: type(d).__name__ + str(d.m))
def test_fp_random_affine_fields(domain):
    rng = make_rng(101, domain.m)
    for trial in range(25):
        A = rng.standard_normal((domain.m, domain.m))
        b = rng.standard_normal(domain.m)
        field = lambda x: b - A @ x
        y, cert = outgoing_fixed_point(field, domain)
        assert domain.contains(y, tol=1e-7)
        assert cert.satisfied
        assert exhaustive_violation(field, y, domain, seed=trial) <= cert.tol + 1e-9


def test_fp_warm_start_used():
    domain = Box(lo=[0, 0], hi=[1, 1])
    field = lambda x: np.array([0.3, 0.7]) - x
    y1, _ = outgoing_fixed_point(field, domain)
    y2, _ = outgoing_fixed_point(field, domain, warm_start=np.array([0.3, 0.7]))
    assert np.allclose(y1, [0.3, 0.7], atol=1e-5)
    assert np.allclose(y2, [0.3, 0.7], atol=1e-5)


# -- outgoing_minimax ----------------------------------------------------------


def test_mm_zero_field_point_mass():
    domain = Interval01()
    grid = domain.uniform_grid(4)
    eta, cert = outgoing_minimax(np.zeros((5, 1)), grid, delta=0.5)
    assert eta.support_size == 1
    assert cert.max_violation <= 1e-12


def test_mm_two_point_example():
    # D = {0, 1}, f(0) = +1, f(1) = -1, delta = 1: the half/half mixture makes
    # E[f(y)(x-y)] = 1/2 for every x, below delta * E||f|| = 1.
    domain = Interval01()
    grid = domain.uniform_grid(1)
    fvals = np.array([[1.0], [-1.0]])
    eta, cert = outgoing_minimax(fvals, grid, delta=1.0)
    assert cert.satisfied
    probs = {tuple(p): w for p, w in zip(eta.points, eta.probs)}
    assert probs[(0.0,)] == pytest.approx(0.5, abs=1e-8)
    assert probs[(1.0,)] == pytest.approx(0.5, abs=1e-8)
    # brute-force the expectation over a fine x sweep
    for x in np.linspace(0, 1, 101):
        lhs = sum(
            w * float(f @ (np.array([x]) - p))
            for p, w, f in zip(eta.points, eta.probs, eta._field_values)
        )
        assert lhs <= 1.0 * 1.0 + 1e-8


def test_mm_opposite_errors_cancel():
    # Adjacent grid values of opposite sign with weights inversely
    # proportional to the magnitudes: E[weighted field] = 0.
    domain = Interval01()
    grid = domain.uniform_grid(4)
    fvals = np.zeros((5, 1))
    fvals[2, 0] = 0.2
    fvals[3, 0] = -0.1
    eta, cert = outgoing_minimax(fvals, grid, delta=0.3)
    assert cert.satisfied
    mean_f = eta.probs @ eta._field_values
    assert abs(mean_f[0]) <= 1e-8


@pytest.mark.parametrize("domain", DOMAINS_M3, ids=lambda d: type(d).__name__ + str(d.m))
def test_mm_random_fields_support_bound(domain):
    rng = make_rng(102, domain.m)
    grid = domain.uniform_grid(3)
    for trial in range(25):
        fvals = rng.standard_normal(grid.points.shape)
        delta = 2.5 * grid.covering_radius + 1e-12
        eta, cert = outgoing_minimax(fvals, grid, delta=delta)
        assert cert.satisfied
        assert eta.support_size <= domain.m + 3
        # independent verification on a dense x sample
        xs = np.vstack([domain.sample(rng, 500), domain.extreme_points()])
        viol = certify_mixture(eta._field_values, eta, domain, delta, tol=1e-8)
        assert viol.max_violation <= 1e-8


def test_mm_rejects_bad_delta():
    domain = Interval01()
    grid = domain.uniform_grid(4)
    with pytest.raises(ValueError):
        outgoing_minimax(np.ones((5, 1)), grid, delta=0.1)  # covering radius 0.125


def test_mm_slack_shrinks_with_delta():
    # For a continuous field sampled on ever finer grids, the certified
    # slack delta * E||f|| shrinks proportionally to delta, so the
    # expectation of f(y).(x-y) is pinched toward <= 0.
    domain = Interval01()
    field = lambda x: np.array([np.cos(3.0 * x[0]) - 0.8])
    sup_f = 1.8
    rng = make_rng(106, 0)
    xs = np.vstack([domain.sample(rng, 400), domain.extreme_points()])
    for delta in (0.4, 0.2, 0.1, 0.05):
        grid = domain.grid_for_covering(delta / 2)
        fvals = np.array([field(p) for p in grid.points]).reshape(-1, 1)
        eta, cert = outgoing_minimax(fvals, grid, delta=delta)
        assert cert.satisfied
        mean_f = eta.probs @ eta._field_values
        worst = max(
            float(mean_f @ x - np.einsum("k,km,km->", eta.probs, eta._field_values, eta.points))
            for x in xs
        )
        assert worst <= delta * sup_f + 1e-9


# -- outgoing_almost_det -------------------------------------------------------


def test_ad_zero_field():
    domain = Interval01()
    grid = domain.uniform_grid(4)
    eta, cert = outgoing_almost_det(np.zeros((5, 1)), grid, delta=0.3)
    assert eta.support_size == 1
    assert cert.satisfied


def test_ad_piecewise_linear_zero():
    # D = {0, .5, 1}, f = (+1, +1, -1), delta = 0.6: the tent interpolation
    # crosses zero between 0.5 and 1, so the mixture lives on {0.5, 1}.
    domain = Interval01()
    grid = domain.uniform_grid(2)
    fvals = np.array([[1.0], [1.0], [-1.0]])
    eta, cert = outgoing_almost_det(fvals, grid, delta=0.6)
    assert cert.satisfied
    support = {tuple(p) for p in eta.points}
    assert support <= {(0.5,), (1.0,)}
    assert eta.support_diameter() <= 2 * 0.6 + 1e-12
    # the interpolated field is zero at the mixture mean field
    assert abs((eta.probs @ eta._field_values)[0]) <= 1e-8


def test_ad_matches_fixed_point_for_continuous_field():
    domain = Interval01()
    grid = domain.uniform_grid(10)
    field = lambda x: np.array([0.5 - x[0]])
    fvals = np.array([field(p) for p in grid.points]).reshape(-1, 1)
    eta, cert = outgoing_almost_det(fvals, grid, delta=0.12)
    y, _ = outgoing_fixed_point(field, domain)
    assert abs(eta.mean()[0] - y[0]) <= 0.12 + 1e-9
    assert cert.satisfied


@pytest.mark.parametrize("domain", DOMAINS_M3, ids=lambda d: type(d).__name__ + str(d.m))
def test_ad_random_fields_locality_and_support(domain):
    rng = make_rng(103, domain.m)
    grid = domain.uniform_grid(3)
    for trial in range(25):
        fvals = rng.standard_normal(grid.points.shape)
        delta = 2.0 * grid.covering_radius + 1e-12 if grid.covering_radius > 0 else 0.5
        eta, cert = outgoing_almost_det(fvals, grid, delta=delta)
        assert cert.satisfied
        assert eta.support_size <= domain.m + 1
        assert eta.support_diameter() <= 2 * delta + 1e-9


def test_tent_interpolate_agrees_on_grid_with_isolated_width():
    domain = Interval01()
    grid = domain.uniform_grid(4)
    fvals = np.arange(5.0).reshape(-1, 1)
    f = tent_interpolate(fvals, grid, width=0.25 + 1e-9)
    for p, v in zip(grid.points, fvals):
        assert f(p) == pytest.approx(v, abs=1e-7)


# -- caratheodory_reduce -------------------------------------------------------


def test_caratheodory_already_small():
    V = np.array([[0.0], [1.0]])
    w = np.array([0.3, 0.7])
    Vr, wr, ok = caratheodory_reduce(V, w)
    assert ok and len(wr) == 2
    assert wr @ Vr == pytest.approx(V.T @ w)


def test_caratheodory_collinear():
    V = np.array([[0.0], [1.0], [2.0], [3.0]])
    w = np.full(4, 0.25)
    mean0 = w @ V
    Vr, wr, ok = caratheodory_reduce(V, w)
    assert ok and len(wr) <= 2
    assert wr @ Vr == pytest.approx(mean0, abs=1e-9)
    assert np.all(wr >= 0)


def test_caratheodory_square_corners():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    w = np.full(4, 0.25)
    Vr, wr, ok = caratheodory_reduce(V, w)
    assert ok and len(wr) <= 3
    assert wr @ Vr == pytest.approx([0.5, 0.5], abs=1e-9)
    assert np.all(wr >= -1e-12)


def test_caratheodory_random_preserves_mean():
    rng = make_rng(104, 0)
    for _ in range(50):
        n, k = int(rng.integers(4, 15)), int(rng.integers(1, 4))
        V = rng.standard_normal((n, k))
        w = rng.dirichlet(np.ones(n))
        mean0 = w @ V
        Vr, wr, ok = caratheodory_reduce(V, w)
        assert ok
        assert len(wr) <= k + 1
        assert np.allclose(wr @ Vr, mean0, atol=1e-9)


# -- nash_via_outgoing ---------------------------------------------------------


def test_nash_prisoners_dilemma():
    y, gaps, cert = nash_via_outgoing(prisoners_dilemma(), tol=1e-8)
    # defect/defect, i.e. second coordinate of each block
    assert np.allclose(y, [0.0, 1.0, 0.0, 1.0], atol=1e-6)
    assert gaps.max() <= 1e-6


def test_nash_matching_pennies():
    y, gaps, cert = nash_via_outgoing(matching_pennies(), tol=1e-8)
    assert np.allclose(y, [0.5, 0.5, 0.5, 0.5], atol=1e-6)
    assert gaps.max() <= 1e-6


def test_nash_rock_paper_scissors():
    y, gaps, cert = nash_via_outgoing(rock_paper_scissors(), tol=1e-8)
    assert np.allclose(y, np.full(6, 1 / 3), atol=1e-5)
    assert gaps.max() <= 1e-6


def test_solver_failure_carries_candidate():
    # A discontinuous field with no outgoing point anywhere: the solver must
    # fail loudly and hand back its best candidate with the certificate.
    domain = Box(lo=[0, 0], hi=[1, 1])

    def field(x):
        return np.array([1.0, 0.0]) if x[0] < 0.5 else np.array([-1.0, 0.0])

    with pytest.raises(SolverFailure) as exc:
        outgoing_fixed_point(field, domain, tol=1e-9)
    assert exc.value.certificate is not None
    assert exc.value.candidate is not None
