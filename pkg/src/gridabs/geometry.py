"""Uniform grid decompositions of R^n: cell indexing, boxes, and distance predicates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

CellIndex = tuple[int, ...]

# Absolute slack for boundary-sensitive predicates.
DISTANCE_ATOL = 1e-12


def _as_point(x, dimension):
    x = np.asarray(x, dtype=float)
    if x.shape != (dimension,):
        raise ValueError(f"expected a point in R^{dimension}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    return x


def _as_cell(z, dimension):
    z = tuple(int(c) for c in z)
    if len(z) != dimension:
        raise ValueError(f"expected a cell index of length {dimension}, got {len(z)}")
    return z


def box_distance(lo, hi, x):
    """Euclidean distance from ``x`` to the closed box [lo, hi]; broadcasts."""
    gap = np.maximum(np.maximum(lo - x, 0.0), x - hi)
    return np.linalg.norm(gap, axis=-1)


@dataclass(frozen=True)
class Box:
    """Axis-aligned half-open box [lo, hi); distances use its closure."""

    lo: np.ndarray
    hi: np.ndarray

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, x):
        return bool(np.all(x >= self.lo) and np.all(x < self.hi))


@dataclass(frozen=True)
class CellConfiguration:
    """An agent's own cell followed by its neighbors' cells, in declared order."""

    agent: int
    cells: tuple[CellIndex, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(tuple(int(c) for c in z) for z in self.cells))
        if len(self.cells) < 1:
            raise ValueError("configuration needs at least the agent's own cell")

    @property
    def own(self) -> CellIndex:
        return self.cells[0]

    @property
    def neighbor_cells(self) -> tuple[CellIndex, ...]:
        return self.cells[1:]


class GridDecomposition:
    """Uniform axis-aligned tiling of R^n by half-open cubes of edge ``side``.

    Cell ``z`` (an integer tuple) covers ``origin + side*z <= x < origin +
    side*(z+1)`` per axis, so every point lies in exactly one cell and a shared
    face belongs to the cell with the larger index on the touching axis.
    """

    def __init__(self, dimension, side, origin=None):
        dimension = int(dimension)
        if dimension < 1:
            raise ValueError("dimension must be at least 1")
        side = float(side)
        if not (side > 0.0 and np.isfinite(side)):
            raise ValueError("cell side must be positive and finite")
        if origin is None:
            origin = np.zeros(dimension)
        origin = _as_point(origin, dimension).copy()
        origin.setflags(write=False)
        self.dimension = dimension
        self.side = side
        self.origin = origin

    def __repr__(self):
        return (f"GridDecomposition(dimension={self.dimension}, side={self.side!r}, "
                f"origin={self.origin.tolist()!r})")

    def cell_of(self, x) -> CellIndex:
        """Index of the unique cell containing ``x``."""
        x = _as_point(x, self.dimension)
        idx = np.floor((x - self.origin) / self.side)
        return tuple(int(c) for c in idx)

    def cell_box(self, z) -> Box:
        z = _as_cell(z, self.dimension)
        lo = self.origin + self.side * np.asarray(z, dtype=float)
        return Box(lo=lo, hi=lo + self.side)

    def cell_center(self, z) -> np.ndarray:
        z = _as_cell(z, self.dimension)
        return self.origin + self.side * (np.asarray(z, dtype=float) + 0.5)

    def diameter(self) -> float:
        """Largest distance between two points of one cell: side * sqrt(n)."""
        return self.side * float(np.sqrt(self.dimension))

    def distance_to_cell(self, z, x):
        """Euclidean distance from ``x`` to the closure of cell ``z`` (0 inside).

        Accepts a single point or an array of points shaped ``(..., n)``.
        """
        box = self.cell_box(z)
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dimension,):
            raise ValueError(f"expected points in R^{self.dimension}, got shape {x.shape}")
        out = box_distance(box.lo, box.hi, x)
        return float(out) if x.ndim == 1 else out

    def inflated_contains(self, z, radius, x) -> bool:
        """Whether ``x`` lies in cell ``z`` inflated by a ball of ``radius``."""
        radius = float(radius)
        if radius < 0.0:
            raise ValueError("inflation radius must be nonnegative")
        return self.distance_to_cell(z, x) <= radius + DISTANCE_ATOL

    def cell_corners(self, z, inset=0.0) -> np.ndarray:
        """The 2^n corner points of cell ``z``, pulled inward by ``inset``."""
        box = self.cell_box(z)
        corners = np.array(list(itertools.product(*zip(box.lo + inset, box.hi - inset))))
        return corners

    def sample_in_cell(self, z, rng, count=1) -> np.ndarray:
        """Uniform samples inside cell ``z``, shape (count, n)."""
        box = self.cell_box(z)
        return rng.uniform(box.lo, box.hi, size=(count, self.dimension))
