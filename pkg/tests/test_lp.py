import numpy as np
import pytest

from calibra._rng import make_rng
from calibra.lp import LPInfeasible, find_feasible


def check_feasible(x, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol=1e-8):
    assert np.all(x >= -tol)
    if A_ub is not None:
        assert np.all(A_ub @ x <= b_ub + tol)
    if A_eq is not None:
        assert np.allclose(A_eq @ x, b_eq, atol=tol)


def test_simple_feasible():
    # x1 + x2 = 1, x1 - x2 <= 0
    x = find_feasible(
        A_ub=np.array([[1.0, -1.0]]),
        b_ub=np.array([0.0]),
        A_eq=np.array([[1.0, 1.0]]),
        b_eq=np.array([1.0]),
        n_vars=2,
    )
    check_feasible(x, np.array([[1.0, -1.0]]), np.array([0.0]), np.array([[1.0, 1.0]]), np.array([1.0]))


def test_infeasible_detected():
    # x1 + x2 = 1 and x1 + x2 <= 0.5 with x >= 0
    with pytest.raises(LPInfeasible):
        find_feasible(
            A_ub=np.array([[1.0, 1.0]]),
            b_ub=np.array([0.5]),
            A_eq=np.array([[1.0, 1.0]]),
            b_eq=np.array([1.0]),
            n_vars=2,
        )


def test_equality_only():
    x = find_feasible(A_ub=None, b_ub=None, A_eq=np.array([[2.0, 1.0]]), b_eq=np.array([3.0]), n_vars=2)
    check_feasible(x, A_eq=np.array([[2.0, 1.0]]), b_eq=np.array([3.0]))


def test_random_mixture_problems():
    # Distributions eta with A eta <= 0 exist by construction: build A so that
    # a known mixture eta0 satisfies it, then ask the solver for any witness.
    rng = make_rng(41, 0)
    for trial in range(50):
        n, k = int(rng.integers(3, 12)), int(rng.integers(2, 20))
        eta0 = rng.dirichlet(np.ones(n))
        A = rng.standard_normal((k, n))
        shift = A @ eta0
        A = A - shift[:, None]  # now A @ eta0 == 0 exactly up to rounding
        x = find_feasible(
            A_ub=A,
            b_ub=np.zeros(k),
            A_eq=np.ones((1, n)),
            b_eq=np.array([1.0]),
            n_vars=n,
        )
        check_feasible(x, A, np.zeros(k), np.ones((1, n)), np.array([1.0]), tol=1e-7)


def test_degenerate_rows():
    # Redundant constraints should not break phase I.
    A_eq = np.array([[1.0, 1.0], [2.0, 2.0]])
    b_eq = np.array([1.0, 2.0])
    x = find_feasible(A_ub=None, b_ub=None, A_eq=A_eq, b_eq=b_eq, n_vars=2)
    check_feasible(x, A_eq=A_eq, b_eq=b_eq)
