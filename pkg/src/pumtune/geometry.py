"""Point clouds, partition-of-unity center grids, and fixed-radius ball queries.

Coordinates are plain ``(n, d)`` float arrays.  The benchmark harness works on
the unit square, but everything here is dimension-generic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientPoints

# Above this size a PointSet carries a uniform-bucket index; below it,
# brute-force scans win on constant factors.
BUCKET_INDEX_THRESHOLD = 10_000


def _distances_to(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    return np.sqrt(((points - center) ** 2).sum(axis=1))


class _BucketIndex:
    """Uniform-bucket spatial index over a fixed point cloud.

    Pure accelerator: `query` returns exactly the indices a brute-force scan
    would, in ascending order.
    """

    def __init__(self, points: np.ndarray):
        n, d = points.shape
        self.points = points
        self.g = max(1, int((n / 2**d) ** (1.0 / d)))
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        self.lo = lo
        self.width = span / self.g
        cells = np.clip(((points - lo) / self.width).astype(int), 0, self.g - 1)
        flat = np.ravel_multi_index(cells.T, (self.g,) * d)
        self.order = np.argsort(flat, kind="stable")
        self.offsets = np.concatenate(
            [[0], np.cumsum(np.bincount(flat, minlength=self.g**d))]
        )

    def query(self, center: np.ndarray, radius: float) -> np.ndarray:
        d = self.points.shape[1]
        lo_cell = np.clip(((center - radius - self.lo) / self.width).astype(int), 0, self.g - 1)
        hi_cell = np.clip(((center + radius - self.lo) / self.width).astype(int), 0, self.g - 1)
        ranges = [np.arange(lo_cell[a], hi_cell[a] + 1) for a in range(d)]
        mesh = np.meshgrid(*ranges, indexing="ij")
        flat = np.ravel_multi_index([m.ravel() for m in mesh], (self.g,) * d)
        candidates = np.concatenate(
            [self.order[self.offsets[c] : self.offsets[c + 1]] for c in flat]
        )
        if candidates.size == 0:
            return candidates
        dist = _distances_to(self.points[candidates], center)
        return np.sort(candidates[dist <= radius])


@dataclass(frozen=True)
class PointSet:
    """Immutable set of d-dimensional points with optional attached values."""

    points: np.ndarray
    values: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("points must be a non-empty (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.values is not None:
            vals = np.array(self.values, dtype=float)
            if vals.shape != (pts.shape[0],):
                raise ValueError("values must be one scalar per point")
            if not np.all(np.isfinite(vals)):
                raise ValueError("values must be finite")
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)
        index = _BucketIndex(pts) if pts.shape[0] >= BUCKET_INDEX_THRESHOLD else None
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, indices: np.ndarray) -> "PointSet":
        vals = None if self.values is None else self.values[indices]
        return PointSet(self.points[indices], vals)


@dataclass(frozen=True)
class CenterGrid:
    """Equispaced, cell-centered grid of partition-of-unity centers."""

    centers: np.ndarray
    per_axis_count: int

    @property
    def m(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class Subdomain:
    """One partition-of-unity ball: center, radius, and member indices."""

    center: np.ndarray
    radius: float
    member_indices: np.ndarray
    delta_min: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(
            self, "member_indices", np.asarray(self.member_indices, dtype=int)
        )
        if self.delta_min <= 0:
            raise ValueError("delta_min must be positive")
        tol = 1e-12 * self.delta_min
        if not (self.delta_min - tol <= self.radius <= 2 * self.delta_min + tol):
            raise ValueError(
                f"radius {self.radius} outside [{self.delta_min}, {2 * self.delta_min}]"
            )

    @property
    def n_members(self) -> int:
        return self.member_indices.shape[0]


def generate_uniform_points(n: int, d: int, seed: int) -> PointSet:
    """Draw n i.i.d. uniform points in [0, 1]^d from a seeded generator.

    Identical (n, d, seed) triples produce bitwise-identical point sets.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(seed)
    return PointSet(rng.random((n, d)))


def build_center_grid(n: int, d: int) -> CenterGrid:
    """Place partition-of-unity centers on a cell-centered grid in [0, 1]^d.

    The per-axis count g is round((n / 2^d)^(1/d)) so that n/m is roughly 2^d;
    half-way ties round to even.  Centers sit at (2i - 1)/(2g) per axis, so
    none lies on the domain boundary.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if n < 2**d:
        raise ValueError(f"need at least 2^d = {2**d} points, got {n}")
    g = max(1, round((n / 2**d) ** (1.0 / d)))
    axis = (2.0 * np.arange(1, g + 1) - 1.0) / (2.0 * g)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    return CenterGrid(centers, g)


def points_in_ball(point_set: PointSet, center: np.ndarray, radius: float) -> np.ndarray:
    """Indices of all points within Euclidean distance `radius` of `center`.

    Ascending order; the closed ball (distance == radius counts as inside).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=float)
    if center.shape != (point_set.dim,):
        raise ValueError("center dimension does not match the point set")
    index = getattr(point_set, "_index")
    if index is not None:
        return index.query(center, radius)
    dist = _distances_to(point_set.points, center)
    return np.nonzero(dist <= radius)[0]


def compute_delta_min(
    point_set: PointSet, center: np.ndarray, m: int, d: int, n_min: int
) -> float:
    """Smallest admissible subdomain radius around `center`.

    Returns max(1/m^(1/d), r*) where r* is the distance to the n_min-th
    nearest data point, so the ball holds at least n_min points and the
    grid covering bound is respected.
    """
    if n_min < 1:
        raise ValueError("n_min must be at least 1")
    if m < 1:
        raise ValueError("m must be at least 1")
    if point_set.n < n_min:
        raise InsufficientPoints(
            f"need {n_min} points to set the minimum radius, have {point_set.n}"
        )
    center = np.asarray(center, dtype=float)
    dist = _distances_to(point_set.points, center)
    r_star = float(np.partition(dist, n_min - 1)[n_min - 1])
    return max(m ** (-1.0 / d), r_star)


def save_points_csv(point_set: PointSet, path, header: bool = False) -> None:
    """Write a point cloud as CSV: d coordinate columns, optional value column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            cols = [f"x{a + 1}" for a in range(point_set.dim)]
            if point_set.values is not None:
                cols.append("value")
            writer.writerow(cols)
        for i in range(point_set.n):
            row = [f"{v:.17g}" for v in point_set.points[i]]
            if point_set.values is not None:
                row.append(f"{point_set.values[i]:.17g}")
            writer.writerow(row)


def load_points_csv(path, with_values: bool = False, header: bool = False) -> PointSet:
    """Read a point cloud written by `save_points_csv`."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if header:
            next(reader, None)
        for row in reader:
            if row:
                rows.append([float(v) for v in row])
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise ValueError(f"no points found in {path}")
    if with_values:
        return PointSet(data[:, :-1], data[:, -1])
    return PointSet(data)
