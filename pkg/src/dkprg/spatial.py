"""Uniform restaurant layouts over the unit city square.

The city is ``[0, 1) x [0, 1)``. Regions are the cells of a ``k x k`` grid,
so every region has area ``1/n`` and diameter ``sqrt(2/n)`` with ``n = k**2``.
Points are stored as ``(count, 2)`` float arrays of ``(x, y)`` rows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

CONCENTRATED = "concentrated"
UNIFORM = "uniform"
PLACEMENTS = (CONCENTRATED, UNIFORM)


class Point(NamedTuple):
    x: float
    y: float


Cell = tuple[int, int]


@dataclass(frozen=True)
class Partition:
    """A ``k x k`` grid of equal square cells covering the unit square.

    Cell ``(row, col)`` covers ``[col/k, (col+1)/k) x [row/k, (row+1)/k)``.
    """

    k: int

    @property
    def n(self) -> int:
        return self.k * self.k

    @property
    def cell_area(self) -> float:
        return 1.0 / self.n

    @property
    def diameter(self) -> float:
        return math.sqrt(2.0) / self.k

    def cells(self) -> list[Cell]:
        return [(r, c) for r in range(self.k) for c in range(self.k)]

    def bounds(self, cell: Cell) -> tuple[float, float, float, float]:
        """Return ``(x0, x1, y0, y1)``; the upper edges are excluded."""
        self._check_cell(cell)
        row, col = cell
        k = self.k
        return col / k, (col + 1) / k, row / k, (row + 1) / k

    def _check_cell(self, cell: Cell) -> None:
        row, col = cell
        if not (0 <= row < self.k and 0 <= col < self.k):
            raise ValueError(f"cell {cell} is not in a {self.k}x{self.k} partition")


def make_partition(k: int) -> Partition:
    if int(k) != k or k < 1:
        raise ValueError(f"grid side must be a positive integer, got {k!r}")
    return Partition(int(k))


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) % 2**64)


def sample_uniform_points(count: int, seed: int) -> np.ndarray:
    """Draw ``count`` i.i.d. uniform points in the unit square."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return _rng(seed).random((count, 2))


def agent_starts(count: int, placement: str, seed: int) -> np.ndarray:
    """Starting points for ``count`` agents.

    ``concentrated`` puts every agent at the centre of the city; ``uniform``
    draws them independently of the restaurants (coincidences allowed).
    """
    if placement == CONCENTRATED:
        return np.full((count, 2), 0.5)
    if placement == UNIFORM:
        return sample_uniform_points(count, seed)
    raise ValueError(f"unknown placement {placement!r}; expected one of {PLACEMENTS}")


def euclidean_distance(p: Sequence[float], q: Sequence[float]) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


def _axis_index(coord: np.ndarray, k: int) -> np.ndarray:
    # floor(coord*k) can land one cell off near an edge; snap it to the
    # float bounds the partition reports.
    idx = np.floor(coord * k).astype(np.int64)
    idx = np.clip(idx, 0, k - 1)
    idx -= (idx / k > coord).astype(np.int64)
    idx += ((idx + 1) / k <= coord).astype(np.int64)
    return idx


def cells_of(partition: Partition, points: np.ndarray) -> np.ndarray:
    """Vectorised :func:`cell_of`; returns an ``(count, 2)`` array of (row, col)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if np.any((pts < 0.0) | (pts >= 1.0)) or not np.all(np.isfinite(pts)):
        raise ValueError("points must lie in the half-open unit square [0,1)^2")
    k = partition.k
    rows = _axis_index(pts[:, 1], k)
    cols = _axis_index(pts[:, 0], k)
    return np.column_stack([rows, cols])


def cell_of(partition: Partition, p: Sequence[float]) -> Cell:
    row, col = cells_of(partition, np.asarray([p], dtype=float))[0]
    return int(row), int(col)


def cells_adjacent(partition: Partition, a: Cell, b: Cell) -> bool:
    """Closed cells touch (diagonal neighbours included)."""
    partition._check_cell(a)
    partition._check_cell(b)
    if tuple(a) == tuple(b):
        raise ValueError("adjacency is defined for two distinct cells")
    return abs(a[0] - b[0]) <= 1 and abs(a[1] - b[1]) <= 1


def adjacent_pairs(partition: Partition) -> list[tuple[Cell, Cell]]:
    """Every unordered pair of adjacent cells (empty for ``k = 1``)."""
    pairs = []
    k = partition.k
    for r in range(k):
        for c in range(k):
            for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < k and 0 <= cc < k:
                    pairs.append(((r, c), (rr, cc)))
    return pairs


def check_distance_bound(partition: Partition, p: Sequence[float], q: Sequence[float]) -> bool:
    """Whether ``d(p, q) <= diam(cell_p) + diam(cell_q)``.

    Points in adjacent grid cells can never violate this.
    """
    return euclidean_distance(p, q) <= 2.0 * partition.diameter


def sample_adjacent_pairs(partition: Partition, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform points ``p`` and ``q`` drawn inside random adjacent cell pairs."""
    pairs = adjacent_pairs(partition)
    if not pairs:
        return np.empty((0, 2)), np.empty((0, 2))
    rng = _rng(seed)
    cells = np.asarray(pairs, dtype=float)  # (npairs, 2, 2) as (row, col)
    pick = cells[rng.integers(len(pairs), size=count)]
    k = partition.k
    offsets = rng.random((count, 2, 2))
    # (row, col) -> (x, y) = ((col + u)/k, (row + v)/k)
    xy = (pick[:, :, ::-1] + offsets) / k
    xy = np.minimum(xy, np.nextafter(1.0, 0.0))
    return xy[:, 0, :], xy[:, 1, :]


@dataclass(frozen=True)
class OccupancyCounts:
    counts: np.ndarray  # (k, k), indexed [row, col]
    total: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.total:
            raise ValueError("occupancy counts do not sum to the number of points")

    @property
    def empty_fraction(self) -> float:
        return float(np.mean(self.counts == 0))


def occupancy_counts(partition: Partition, points: np.ndarray) -> OccupancyCounts:
    cells = cells_of(partition, points)
    k = partition.k
    flat = np.bincount(cells[:, 0] * k + cells[:, 1], minlength=k * k)
    return OccupancyCounts(flat.reshape(k, k), len(cells))


def write_points_csv(path, points: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y"])
        for i, (x, y) in enumerate(np.asarray(points)):
            writer.writerow([i, f"{x:.9g}", f"{y:.9g}"])


def read_points_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["id"]))
    return np.array([[float(r["x"]), float(r["y"])] for r in rows]).reshape(-1, 2)
