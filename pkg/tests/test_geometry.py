"""Grid decomposition and point-to-box geometry."""

import numpy as np
import pytest

from gridabs.geometry import (DISTANCE_ATOL, Box, CellConfiguration,
                              GridDecomposition, box_distance)


def test_cell_of_floor_indexing():
    grid = GridDecomposition(2, 0.5)
    assert grid.cell_of([0.0, 0.0]) == (0, 0)
    assert grid.cell_of([0.49, 0.51]) == (0, 1)
    assert grid.cell_of([-0.01, -0.5]) == (-1, -1)
    assert grid.cell_of([-0.51, 1.0]) == (-2, 2)


def test_cells_are_half_open():
    grid = GridDecomposition(2, 0.5)
    # lower faces belong to the cell, upper faces to the next one
    assert grid.cell_of([0.5, 0.0]) == (1, 0)
    box = grid.cell_box((0, 0))
    assert box.contains([0.0, 0.0])
    assert not box.contains([0.5, 0.25])


def test_origin_shift():
    grid = GridDecomposition(2, 1.0, origin=[10.0, -3.0])
    assert grid.cell_of([10.2, -2.5]) == (0, 0)
    assert grid.cell_of([9.9, -3.1]) == (-1, -1)
    np.testing.assert_allclose(grid.cell_center((0, 0)), [10.5, -2.5])


def test_diameter_is_side_times_sqrt_dim():
    for n in (1, 2, 3, 5):
        grid = GridDecomposition(n, 0.25)
        assert grid.diameter() == pytest.approx(0.25 * np.sqrt(n), rel=1e-15)


def test_cell_box_round_trip():
    grid = GridDecomposition(3, 0.7, origin=[0.1, -0.2, 0.0])
    rng = np.random.default_rng(0)
    for _ in range(50):
        z = tuple(int(v) for v in rng.integers(-4, 5, 3))
        pts = grid.sample_in_cell(z, rng, count=20)
        for p in pts:
            assert grid.cell_of(p) == z


def test_box_distance_values():
    lo = np.zeros(2)
    hi = np.ones(2)
    assert box_distance(lo, hi, [0.5, 0.5]) == 0.0
    assert box_distance(lo, hi, [1.5, 0.5]) == pytest.approx(0.5)
    assert box_distance(lo, hi, [-0.3, 0.5]) == pytest.approx(0.3)
    assert box_distance(lo, hi, [2.0, 2.0]) == pytest.approx(np.sqrt(2.0))


def test_box_distance_matches_projection():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        lo = rng.normal(size=n)
        hi = lo + rng.uniform(0.1, 2.0, size=n)
        x = rng.normal(scale=3.0, size=n)
        proj = np.clip(x, lo, hi)
        assert box_distance(lo, hi, x) == pytest.approx(np.linalg.norm(x - proj), abs=1e-14)


def test_box_distance_broadcasts():
    lo = np.zeros(2)
    hi = np.ones(2)
    pts = np.stack([[0.5, 0.5], [2.0, 0.5], [0.5, -1.0]])
    out = box_distance(lo, hi, pts)
    np.testing.assert_allclose(out, [0.0, 1.0, 1.0])


def test_distance_to_cell_and_inflation():
    grid = GridDecomposition(2, 1.0)
    z = (2, -1)
    box = grid.cell_box(z)
    radius = 0.25
    # corner plus an outward diagonal step of exactly `radius`
    x = box.hi + radius * np.array([1.0, 1.0]) / np.sqrt(2.0)
    assert grid.distance_to_cell(z, x) == pytest.approx(radius, abs=1e-15)
    assert grid.inflated_contains(z, radius, x)
    assert not grid.inflated_contains(z, radius - 1e-9, x)
    # tolerance keeps exact-boundary points inside
    assert grid.inflated_contains(z, radius - 0.5 * DISTANCE_ATOL, x)


def test_cell_corners_inset():
    grid = GridDecomposition(2, 1.0)
    corners = grid.cell_corners((0, 0))
    assert corners.shape == (4, 2)
    inset = grid.cell_corners((0, 0), inset=0.1)
    box = grid.cell_box((0, 0))
    for c in inset:
        assert box.contains(c)
    assert np.min(inset) == pytest.approx(0.1)
    assert np.max(inset) == pytest.approx(0.9)


def test_sample_in_cell_is_deterministic():
    grid = GridDecomposition(3, 0.3)
    a = grid.sample_in_cell((1, 2, -1), np.random.default_rng(7), count=10)
    b = grid.sample_in_cell((1, 2, -1), np.random.default_rng(7), count=10)
    np.testing.assert_array_equal(a, b)


def test_box_center_and_contains():
    box = Box(np.array([0.0, 1.0]), np.array([2.0, 3.0]))
    np.testing.assert_allclose(box.center, [1.0, 2.0])
    assert box.contains([0.0, 1.0])
    assert not box.contains([2.0, 2.0])


def test_configuration_split():
    cfg = CellConfiguration(agent=1, cells=((0, 0), (1, 0), (-1, 2)))
    assert cfg.own == (0, 0)
    assert cfg.neighbor_cells == ((1, 0), (-1, 2))


def test_grid_rejects_bad_arguments():
    with pytest.raises(ValueError):
        GridDecomposition(0, 1.0)
    with pytest.raises(ValueError):
        GridDecomposition(2, 0.0)
    with pytest.raises(ValueError):
        GridDecomposition(2, 1.0, origin=[0.0])
