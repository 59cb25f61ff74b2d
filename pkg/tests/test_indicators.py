import numpy as np
import pytest

import oracles
from hybridroute.indicators import hypervolume, nondominated
from hybridroute.objectives import ObjectiveVector


def test_hv_examples():
    assert hypervolume([(1.0, 1.0)], (0.0, 0.0)) == 1.0
    assert hypervolume([(1.0, 2.0), (2.0, 1.0)], (0.0, 0.0)) == pytest.approx(3.0)
    assert hypervolume([(1.0, 2.0), (2.0, 1.0), (0.5, 0.5)], (0.0, 0.0)) == pytest.approx(3.0)
    assert hypervolume([], (0.0, 0.0)) == 0.0


def test_hv_two_point_example_against_monte_carlo():
    mc = oracles.monte_carlo_hv([(1.0, 2.0), (2.0, 1.0)], (0.0, 0.0), 10**6, np.random.default_rng(0))
    assert mc == pytest.approx(3.0, rel=0.01)


def test_hv_clips_points_not_beyond_ref():
    assert hypervolume([(1.0, 0.0), (2.0, 2.0)], (0.0, 0.0)) == pytest.approx(4.0)
    assert hypervolume([(-1.0, 5.0)], (0.0, 0.0)) == 0.0


def test_hv_uses_maximisation_form_of_vectors():
    v = ObjectiveVector(2.0, 1.0, 0.5, 0.25)
    ref = (0.0, -2.0, -1.0, -1.0)
    assert hypervolume([v], ref) == pytest.approx(2.0 * 1.0 * 0.5 * 0.75)


def test_hv_monotone_under_added_points():
    rng = np.random.default_rng(3)
    for _ in range(20):
        front = rng.random((8, 3)).tolist()
        base = hypervolume(front, (0.0, 0.0, 0.0))
        p = rng.random(3).tolist()
        assert hypervolume(front + [p], (0.0, 0.0, 0.0)) >= base - 1e-15


def test_hv_3d_against_grid_count():
    # integer points: exact volume by counting unit cells
    rng = np.random.default_rng(5)
    for _ in range(10):
        pts = rng.integers(1, 6, size=(6, 3))
        cells = sum(1 for x in range(5) for y in range(5) for z in range(5)
                    if any((np.array([x, y, z]) < p).all() for p in pts))
        assert hypervolume(pts.tolist(), (0, 0, 0)) == pytest.approx(cells)


def test_hv_4d_against_monte_carlo():
    rng = np.random.default_rng(11)
    for _ in range(3):
        front = rng.random((10, 4)) + 0.1
        hv = hypervolume(front.tolist(), (0.0,) * 4)
        mc = oracles.monte_carlo_hv(front, (0.0,) * 4, 200_000, rng)
        assert hv == pytest.approx(mc, rel=0.03)


def test_nondominated_filter():
    pts = [(1, 1), (2, 0), (0, 2), (0.5, 0.5), (1, 1)]
    assert sorted(nondominated(pts)) == [(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)]
    assert nondominated([]) == []
