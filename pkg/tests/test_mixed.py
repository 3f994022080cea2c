import numpy as np
import pytest

from calibra._rng import make_rng
from calibra.mixed import MixedForecast


def test_point_mass():
    mf = MixedForecast.point_mass(np.array([0.3]))
    assert mf.support_size == 1
    assert mf.mean() == pytest.approx([0.3])
    assert mf.locality_radius == 0.0


def test_probability_validation():
    with pytest.raises(ValueError):
        MixedForecast([[0.0], [1.0]], [0.6, 0.6])
    with pytest.raises(ValueError):
        MixedForecast([[0.0], [1.0]], [1.3, -0.3])


def test_locality_ball_check():
    MixedForecast([[0.4], [0.6]], [0.5, 0.5], locality_radius=0.1)
    with pytest.raises(ValueError):
        MixedForecast([[0.0], [1.0]], [0.5, 0.5], locality_radius=0.1)


def test_zero_prob_support_dropped():
    mf = MixedForecast([[0.0], [0.5], [1.0]], [0.5, 0.0, 0.5])
    assert mf.support_size == 2


def test_sampling_deterministic_and_consistent():
    mf = MixedForecast([[0.8], [0.2]], [0.25, 0.75])
    draws1 = [mf.sample(make_rng(5, 0)) for _ in range(1)]
    draws2 = [mf.sample(make_rng(5, 0)) for _ in range(1)]
    assert np.array_equal(draws1[0], draws2[0])
    rng = make_rng(6, 0)
    draws = np.array([mf.sample(rng)[0] for _ in range(20000)])
    # support sorted lexicographically: 0.2 carries prob 0.75
    assert abs((draws == 0.2).mean() - 0.75) < 0.01
    assert set(np.unique(draws)) == {0.2, 0.8}


def test_expectation():
    mf = MixedForecast([[0.0], [1.0]], [0.5, 0.5])
    vals = np.array([[2.0], [4.0]])
    assert mf.expectation(vals) == pytest.approx([3.0])


def test_mean_and_diameter():
    mf = MixedForecast([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])
    assert mf.mean() == pytest.approx([0.5, 0.5])
    assert mf.support_diameter() == pytest.approx(np.sqrt(2.0))
