"""Point-cloud container, spatial queries, preprocessing and normal estimation.

All operations are pure: they take immutable clouds and return new clouds.
Determinism is a hard requirement throughout, so every nearest-neighbor
query breaks distance ties by ascending point index and every reduction
runs in a fixed order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-6


def _as_points(arr, name: str) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out.ndim != 2 or out.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {out.shape}")
    return out


@dataclass(frozen=True)
class PointCloud:
    """Ordered 3D points with optional per-point normals, curvatures, confidences.

    Invariants enforced at construction: optional attribute arrays match the
    point count, normals are unit length within 1e-6 and curvatures lie in
    [0, 1]. Arrays are marked read-only; treat instances as immutable.
    """

    points: np.ndarray
    normals: np.ndarray | None = None
    curvatures: np.ndarray | None = None
    confidences: np.ndarray | None = None

    def __post_init__(self):
        points = _as_points(self.points, "points")
        object.__setattr__(self, "points", points)
        n = len(points)
        if self.normals is not None:
            normals = _as_points(self.normals, "normals")
            if len(normals) != n:
                raise ValueError("normals length does not match points")
            norms = np.linalg.norm(normals, axis=1)
            if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
                raise ValueError("normals must be unit length within 1e-6")
            object.__setattr__(self, "normals", normals)
        if self.curvatures is not None:
            curv = np.ascontiguousarray(self.curvatures, dtype=np.float64)
            if curv.shape != (n,):
                raise ValueError("curvatures length does not match points")
            if np.any(curv < 0.0) or np.any(curv > 1.0):
                raise ValueError("curvatures must lie in [0, 1]")
            object.__setattr__(self, "curvatures", curv)
        if self.confidences is not None:
            conf = np.ascontiguousarray(self.confidences, dtype=np.float64)
            if conf.shape != (n,):
                raise ValueError("confidences length does not match points")
            object.__setattr__(self, "confidences", conf)
        for arr in (self.points, self.normals, self.curvatures, self.confidences):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    @property
    def has_curvatures(self) -> bool:
        return self.curvatures is not None

    def centroid(self) -> np.ndarray:
        if len(self) == 0:
            raise ValueError("empty cloud has no centroid")
        return self.points.mean(axis=0)

    def bounding_radius(self) -> float:
        """Radius of the bounding sphere centered at the centroid."""
        if len(self) == 0:
            raise ValueError("empty cloud has no bounding radius")
        return float(np.linalg.norm(self.points - self.centroid(), axis=1).max())

    def select(self, indices) -> "PointCloud":
        """New cloud restricted to ``indices`` (order preserved)."""
        idx = np.asarray(indices)
        return PointCloud(
            points=self.points[idx],
            normals=None if self.normals is None else self.normals[idx],
            curvatures=None if self.curvatures is None else self.curvatures[idx],
            confidences=None if self.confidences is None else self.confidences[idx],
        )

    def with_attrs(self, normals=None, curvatures=None) -> "PointCloud":
        return PointCloud(
            points=self.points,
            normals=self.normals if normals is None else normals,
            curvatures=self.curvatures if curvatures is None else curvatures,
            confidences=self.confidences,
        )


class SpatialIndex:
    """k-NN / radius queries over a fixed cloud with deterministic tie-breaks.

    Results are sorted by ascending distance; exact distance ties are broken
    by ascending point index, so queries are reproducible bit for bit.
    """

    def __init__(self, cloud_or_points):
        pts = cloud_or_points.points if isinstance(cloud_or_points, PointCloud) else cloud_or_points
        self._points = _as_points(pts, "points")
        if len(self._points) == 0:
            raise ValueError("cannot index an empty cloud")
        self._tree = cKDTree(self._points)

    def __len__(self) -> int:
        return len(self._points)

    def _order(self, query: np.ndarray, candidates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        diff = self._points[candidates] - query
        d2 = diff[:, 0] ** 2 + diff[:, 1] ** 2 + diff[:, 2] ** 2
        order = np.lexsort((candidates, d2))
        return candidates[order], np.sqrt(d2[order])

    def knn(self, query, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of the k nearest points to ``query``."""
        query = np.asarray(query, dtype=np.float64)
        n = len(self._points)
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        dist, _ = self._tree.query(query, k=k)
        dk = float(np.max(dist))
        # Re-collect everything within the k-th distance (slightly inflated to
        # be safe against rounding) so ties at the boundary are resolved by
        # index rather than by tree traversal order.
        candidates = np.asarray(
            self._tree.query_ball_point(query, dk * (1.0 + 1e-9) + 1e-300), dtype=np.intp
        )
        idx, d = self._order(query, candidates)
        return idx[:k], d[:k]

    def knn_all(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k-NN of every indexed point against the cloud itself.

        Returns (indices, distances) of shape (n, k). Each query point is its
        own nearest neighbor (distance 0) unless a duplicate point with a
        lower index exists.
        """
        n = len(self._points)
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        dist, _ = self._tree.query(self._points, k=k)
        dist = np.atleast_2d(dist.reshape(n, -1))
        dk = dist[:, -1] * (1.0 + 1e-9) + 1e-300
        hoods = self._tree.query_ball_point(self._points, dk)
        out_idx = np.empty((n, k), dtype=np.intp)
        out_d = np.empty((n, k), dtype=np.float64)
        for i in range(n):
            cand = np.asarray(hoods[i], dtype=np.intp)
            idx, d = self._order(self._points[i], cand)
            out_idx[i] = idx[:k]
            out_d[i] = d[:k]
        return out_idx, out_d

    def radius(self, query, r: float) -> tuple[np.ndarray, np.ndarray]:
        """All indices within distance ``r`` of ``query`` (sorted, tie-broken)."""
        query = np.asarray(query, dtype=np.float64)
        candidates = np.asarray(self._tree.query_ball_point(query, r), dtype=np.intp)
        if len(candidates) == 0:
            return candidates, np.empty(0)
        return self._order(query, candidates)

    def nearest(self, query) -> int:
        return int(self.knn(query, 1)[0][0])


def voxel_downsample(cloud: PointCloud, voxel: float) -> PointCloud:
    """Collapse the cloud to one centroid per occupied voxel.

    Output order is lexicographic in integer voxel coordinates. Normals are
    the renormalized mean of member normals (falling back to the lowest-index
    member when the mean vanishes); curvatures and confidences average.
    """
    if voxel <= 0:
        raise ValueError(f"voxel size must be positive, got {voxel}")
    if len(cloud) == 0:
        return cloud
    coords = np.floor(cloud.points / voxel).astype(np.int64)
    # Sort by (voxel coords, original index) to get deterministic groups.
    order = np.lexsort((np.arange(len(cloud)), coords[:, 2], coords[:, 1], coords[:, 0]))
    sorted_coords = coords[order]
    boundaries = np.ones(len(cloud), dtype=bool)
    boundaries[1:] = np.any(sorted_coords[1:] != sorted_coords[:-1], axis=1)
    starts = np.flatnonzero(boundaries)
    ends = np.append(starts[1:], len(cloud))

    points = np.empty((len(starts), 3))
    normals = np.empty((len(starts), 3)) if cloud.normals is not None else None
    curvatures = np.empty(len(starts)) if cloud.curvatures is not None else None
    confidences = np.empty(len(starts)) if cloud.confidences is not None else None
    for j, (a, b) in enumerate(zip(starts, ends)):
        members = order[a:b]
        points[j] = cloud.points[members].mean(axis=0)
        if normals is not None:
            mean_n = cloud.normals[members].mean(axis=0)
            norm = np.linalg.norm(mean_n)
            if norm < 1e-12:
                normals[j] = cloud.normals[members.min()]
            else:
                normals[j] = mean_n / norm
        if curvatures is not None:
            curvatures[j] = np.clip(cloud.curvatures[members].mean(), 0.0, 1.0)
        if confidences is not None:
            confidences[j] = cloud.confidences[members].mean()
    return PointCloud(points, normals, curvatures, confidences)


def remove_statistical_outliers(cloud: PointCloud, k: int = 12, std_ratio: float = 2.0) -> PointCloud:
    """Drop points whose mean k-NN distance exceeds mean + std_ratio * std.

    ``k`` excludes the point itself; the cloud must have at least k + 1
    points. Survivor order matches the input order.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(cloud) < k + 1:
        raise ValueError(f"cloud of {len(cloud)} points is too small for k={k}")
    index = SpatialIndex(cloud)
    idx, dist = index.knn_all(k + 1)
    # Drop the self entry per row (matching index, first occurrence).
    n = len(cloud)
    mean_d = np.empty(n)
    rows = np.arange(n)
    for i in range(n):
        self_pos = np.flatnonzero(idx[i] == i)
        keep = np.ones(k + 1, dtype=bool)
        keep[self_pos[0] if len(self_pos) else 0] = False
        mean_d[i] = dist[i][keep].mean()
    threshold = mean_d.mean() + std_ratio * mean_d.std()
    mask = mean_d <= threshold
    removed = int(n - mask.sum())
    if removed:
        logger.debug("outlier filter removed %d of %d points", removed, n)
    return cloud.select(rows[mask])


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip so the component of largest magnitude is positive."""
    dominant = int(np.argmax(np.abs(v)))
    return v if v[dominant] >= 0 else -v


def estimate_normals_curvatures(cloud: PointCloud, k: int = 16) -> PointCloud:
    """PCA normals and surface-variation curvature over k-NN neighborhoods.

    The neighborhood of a point is its k nearest cloud points (the point
    itself included). The normal is the eigenvector of the smallest
    covariance eigenvalue, oriented away from the cloud centroid; curvature
    is lambda_min / (sum of eigenvalues), clamped to [0, 1]. Coincident
    neighborhoods degrade to normal +Z with curvature 0 and are logged.
    """
    if k < 3:
        raise ValueError(f"k must be >= 3, got {k}")
    if len(cloud) < k:
        raise ValueError(f"cloud of {len(cloud)} points is too small for k={k}")
    index = SpatialIndex(cloud)
    hoods, _ = index.knn_all(k)
    nbh = cloud.points[hoods]  # (n, k, 3)
    centered = nbh - nbh.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending eigenvalues
    normals = eigvecs[:, :, 0].copy()
    total = eigvals.sum(axis=1)
    degenerate = total <= 0.0
    if np.any(degenerate):
        logger.warning("%d degenerate neighborhoods (coincident points)", int(degenerate.sum()))
        normals[degenerate] = (0.0, 0.0, 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        curvatures = np.where(degenerate, 0.0, eigvals[:, 0] / np.where(total > 0, total, 1.0))
    curvatures = np.clip(curvatures, 0.0, 1.0)
    # Orient away from the cloud centroid; exactly tangent normals fall back
    # to the canonical largest-component-positive sign.
    outward = cloud.points - cloud.centroid()
    side = np.einsum("ni,ni->n", normals, outward)
    normals[side < 0] *= -1.0
    for i in np.flatnonzero(side == 0):
        normals[i] = _canonical_sign(normals[i])
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / norms
    return cloud.with_attrs(normals=normals, curvatures=curvatures)
