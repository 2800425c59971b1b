"""Point clouds and exact K-nearest-neighbor queries.

Clouds are irregular sets of points with one scalar sample per point.
Neighbor queries are exact Euclidean KNN backed by a KD-tree, with ties
broken by ascending point index so that stencils are deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    CloudFormatError,
    DuplicatePointsError,
    EmptyCloudError,
    KTooLargeError,
)

# Relative slack when collecting tie candidates at the K-th distance.
_TIE_SLACK = 1.0 + 1e-12


@dataclass(frozen=True)
class PointCloud:
    """Irregular mesh points with scalar samples u(x_j).

    points has shape (J, n), values shape (J,).  Duplicate points are
    rejected at construction: every stencil must be well posed.
    """

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(self.points, dtype=float)))
        vals = np.asarray(self.values, dtype=float).ravel()
        if pts.size == 0:
            raise EmptyCloudError("point cloud is empty")
        if pts.ndim != 2:
            raise CloudFormatError(f"points must be a (J, n) array, got shape {pts.shape}")
        if pts.shape[0] != vals.shape[0]:
            raise CloudFormatError(
                f"{pts.shape[0]} points but {vals.shape[0]} values"
            )
        if not np.isfinite(pts).all():
            raise CloudFormatError("points contain non-finite coordinates")
        if not np.isfinite(vals).all():
            raise CloudFormatError("values contain non-finite entries")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise DuplicatePointsError("cloud contains bitwise-identical points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SpatialIndex:
    """Immutable exact-KNN structure over a PointCloud.

    Safe for concurrent read queries; construction is single threaded.
    """

    cloud: PointCloud
    _tree: cKDTree = field(repr=False)


def build_index(cloud: PointCloud) -> SpatialIndex:
    """Build an exact Euclidean KNN index over all cloud points."""
    return SpatialIndex(cloud=cloud, _tree=cKDTree(cloud.points))


def _resort_candidates(points, query_point, candidates, k):
    """Order candidate indices by (distance, index) and keep the first k."""
    cand = np.asarray(candidates, dtype=np.intp)
    d = np.linalg.norm(points[cand] - query_point, axis=1)
    order = np.lexsort((cand, d))
    keep = order[:k]
    return cand[keep], d[keep]

def knn(index: SpatialIndex, query_index: int, k: int) -> list[tuple[int, float]]:
    """K nearest cloud points to the point with the given index.

    The query point itself is included (distance 0 is nearest).  Returns
    k pairs (point index, distance) sorted by distance ascending, exact
    ties broken by ascending point index.
    """
    idx, dist = knn_arrays(index, query_index, k)
    return list(zip(idx.tolist(), dist.tolist()))


def knn_arrays(index: SpatialIndex, query_index: int, k: int):
    """Array-valued version of knn: (indices, distances)."""
    cloud = index.cloud
    j = cloud.size
    if k < 1 or k > j:
        raise KTooLargeError(f"K={k} outside [1, {j}]")
    x = cloud.points[query_index]
    d_tree, _ = index._tree.query(x, k=k)
    d_tree = np.atleast_1d(d_tree)
    r = d_tree[-1] * _TIE_SLACK
    cand = index._tree.query_ball_point(x, r)
    return _resort_candidates(cloud.points, x, cand, k)


def knn_all(index: SpatialIndex, k: int):
    """KNN stencils for every cloud point at once.

    Returns (indices, distances) of shape (J, k), row j holding the
    neighbors of point j under the same ordering contract as knn().
    Boundary ties (equal K-th and (K+1)-th distance) are resolved by
    ascending index exactly as a brute-force scan would.
    """
    cloud = index.cloud
    j = cloud.size
    if k < 1 or k > j:
        raise KTooLargeError(f"K={k} outside [1, {j}]")
    kq = min(k + 1, j)
    d_tree, i_tree = index._tree.query(cloud.points, k=kq)
    d_tree = d_tree.reshape(j, kq)
    i_tree = i_tree.reshape(j, kq)

    nbr = i_tree[:, :k]
    # Recompute distances with the same formula the brute-force oracle uses,
    # then stable-sort within each stencil by (distance, index).
    d = np.linalg.norm(cloud.points[nbr] - cloud.points[:, None, :], axis=2)
    order = np.lexsort((nbr, d), axis=1)
    rows = np.arange(j)[:, None]
    nbr = nbr[rows, order]
    d = d[rows, order]

    if kq > k:
        # A tie straddling the K boundary needs the full candidate set.
        ambiguous = np.flatnonzero(d_tree[:, k] <= d[:, -1] * _TIE_SLACK)
        for row in ambiguous:
            cand = index._tree.query_ball_point(cloud.points[row], d[row, -1] * _TIE_SLACK)
            nbr[row], d[row] = _resort_candidates(
                cloud.points, cloud.points[row], cand, k
            )
    return nbr, d


def load_cloud_csv(path) -> PointCloud:
    """Read a point cloud from CSV with header x1,...,xn,u."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CloudFormatError(f"{path}: empty file") from None
        header = [c.strip() for c in header]
        if len(header) < 2 or header[-1] != "u":
            raise CloudFormatError(
                f"{path}: expected header x1,...,xn,u, got {header!r}"
            )
        for d, name in enumerate(header[:-1]):
            if name != f"x{d + 1}":
                raise CloudFormatError(f"{path}: column {d + 1} named {name!r}, expected x{d + 1}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CloudFormatError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise CloudFormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise EmptyCloudError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    return PointCloud(points=data[:, :-1], values=data[:, -1])


def save_cloud_csv(cloud: PointCloud, path) -> None:
    """Write a point cloud in the format load_cloud_csv reads."""
    from .cli.io import format_float  # local import: io depends on nothing here

    header = [f"x{d + 1}" for d in range(cloud.dim)] + ["u"]
    lines = [",".join(header)]
    for p, v in zip(cloud.points, cloud.values):
        lines.append(",".join(format_float(c) for c in (*p, v)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
