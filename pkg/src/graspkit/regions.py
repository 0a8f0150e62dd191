"""Planar decomposition of a cloud by curvature-seeded soft region growing.

Growth starts at the lowest-curvature available point and admits a neighbor
when its normal stays within an angular tolerance of the seed normal AND it
lies within a distance tolerance of the region's incrementally refitted
plane. The distance slack is what lets gently curved surfaces come out as a
small number of locally planar patches instead of fragmenting.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, SpatialIndex, _canonical_sign

logger = logging.getLogger(__name__)

REFIT_INTERVAL = 32


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class RegionGrowingParams:
    angle_threshold_deg: float = 15.0
    curvature_threshold: float = 0.05
    distance_threshold: float = 0.005
    k_neighbors: int = 16
    min_region_size: int = 20

    def __post_init__(self):
        if not 0.0 < self.angle_threshold_deg < 90.0:
            raise ValueError("angle_threshold_deg must be in (0, 90)")
        if self.curvature_threshold < 0:
            raise ValueError("curvature_threshold must be >= 0")
        if self.distance_threshold < 0:
            raise ValueError("distance_threshold must be >= 0")
        if self.k_neighbors < 3:
            raise ValueError("k_neighbors must be >= 3")
        if self.min_region_size < 3:
            raise ValueError("min_region_size must be >= 3")


@dataclass(frozen=True)
class PlanarRegion:
    """A segmented patch with its total least-squares plane fit.

    The plane is n . x = d. ``plane_normal`` is oriented to agree with the
    member points' stored normals (outward for well-oriented clouds), which
    downstream antiparallel pairing relies on.
    """

    point_indices: np.ndarray
    plane_normal: np.ndarray
    plane_offset: float
    centroid: np.ndarray
    rms_residual: float
    extent: tuple[float, float]

    def __len__(self) -> int:
        return len(self.point_indices)


@dataclass(frozen=True)
class Segmentation:
    """Regions sorted by descending size plus the unsegmented residue.

    Behaves as a sequence of PlanarRegion so callers that only care about
    regions can iterate it directly.
    """

    regions: tuple[PlanarRegion, ...]
    residue_indices: np.ndarray
    cloud_size: int

    def __len__(self) -> int:
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)

    def __getitem__(self, i):
        return self.regions[i]

    def region_ids(self) -> np.ndarray:
        """Per-point region id, -1 for residue points."""
        ids = np.full(self.cloud_size, -1, dtype=np.int64)
        for rid, region in enumerate(self.regions):
            ids[region.point_indices] = rid
        return ids


def fit_plane_lsq(points: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Total least-squares plane through ``points``.

    Returns (normal, offset, rms) with the plane n . x = offset. The normal
    sign is canonical: its largest-magnitude component is positive.
    Collinear or coincident inputs raise DegenerateFitError.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 3:
        raise DegenerateFitError("plane fit needs at least 3 points")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / len(pts)
    eigvals, eigvecs = np.linalg.eigh(cov)
    # rank < 2 means the points do not span a plane
    if eigvals[1] <= max(eigvals[2], 1.0) * 1e-12:
        raise DegenerateFitError("points are collinear or coincident")
    normal = _canonical_sign(eigvecs[:, 0])
    offset = float(normal @ centroid)
    rms = float(np.sqrt(np.maximum(eigvals[0], 0.0)))
    return normal, offset, rms


def _in_plane_extent(points: np.ndarray, normal: np.ndarray) -> tuple[float, float]:
    """Principal half-lengths of the points projected into the plane."""
    centered = points - points.mean(axis=0)
    tangential = centered - np.outer(centered @ normal, normal)
    cov = tangential.T @ tangential / len(points)
    eigvals, eigvecs = np.linalg.eigh(cov)
    half = []
    for col in (2, 1):  # two largest in-plane directions
        coords = tangential @ eigvecs[:, col]
        half.append(float((coords.max() - coords.min()) / 2.0))
    return (half[0], half[1])


def _finish_region(cloud: PointCloud, members: list[int]) -> PlanarRegion:
    idx = np.array(sorted(members), dtype=np.intp)
    pts = cloud.points[idx]
    normal, offset, _ = fit_plane_lsq(pts)
    # Align the fitted normal with the members' stored orientation so that
    # opposite faces of an object keep opposite region normals.
    mean_member_normal = cloud.normals[idx].mean(axis=0)
    if normal @ mean_member_normal < 0:
        normal = -normal
        offset = -offset
    residuals = pts @ normal - offset
    rms = float(np.sqrt(np.mean(residuals**2)))
    return PlanarRegion(
        point_indices=idx,
        plane_normal=normal,
        plane_offset=offset,
        centroid=pts.mean(axis=0),
        rms_residual=rms,
        extent=_in_plane_extent(pts, normal),
    )


def segment(cloud: PointCloud, params: RegionGrowingParams | None = None) -> Segmentation:
    """Grow planar regions over ``cloud`` (which must carry normals and curvatures).

    Seeds are picked at the minimum-curvature available point (ties by lowest
    index). A neighbor joins when its normal deviates from the seed normal by
    less than the angle threshold and it lies within the distance threshold
    of the region's incremental plane; joined points below the curvature
    threshold keep growing the front. Regions smaller than min_region_size end
    up in the residue. Output regions are sorted by descending size, ties by
    lowest member index.
    """
    params = params or RegionGrowingParams()
    if len(cloud) == 0:
        raise ValueError("cannot segment an empty cloud")
    if cloud.normals is None or cloud.curvatures is None:
        raise ValueError("segmentation requires normals and curvatures")

    n = len(cloud)
    k = min(params.k_neighbors, n)
    index = SpatialIndex(cloud)
    hoods, _ = index.knn_all(k)
    cos_threshold = float(np.cos(np.radians(params.angle_threshold_deg)))
    normals = cloud.normals
    points = cloud.points
    curvatures = cloud.curvatures

    available = np.ones(n, dtype=bool)
    seed_order = np.lexsort((np.arange(n), curvatures))
    seed_cursor = 0

    raw_regions: list[list[int]] = []
    while True:
        while seed_cursor < n and not available[seed_order[seed_cursor]]:
            seed_cursor += 1
        if seed_cursor >= n:
            break
        seed = int(seed_order[seed_cursor])
        seed_normal = normals[seed]
        available[seed] = False
        members = [seed]
        # Incremental plane: starts as the seed's tangent plane, refit from
        # the accumulated members every REFIT_INTERVAL accepted points.
        plane_n = seed_normal
        plane_d = float(plane_n @ points[seed])
        queue = deque([seed])
        since_refit = 0
        while queue:
            current = queue.popleft()
            for nbr in hoods[current]:
                if not available[nbr]:
                    continue
                if normals[nbr] @ seed_normal <= cos_threshold:
                    continue
                if abs(points[nbr] @ plane_n - plane_d) >= params.distance_threshold:
                    continue
                available[nbr] = False
                members.append(int(nbr))
                since_refit += 1
                if curvatures[nbr] < params.curvature_threshold:
                    queue.append(int(nbr))
                if since_refit >= REFIT_INTERVAL and len(members) >= 3:
                    try:
                        fit_n, fit_d, _ = fit_plane_lsq(points[members])
                    except DegenerateFitError:
                        pass
                    else:
                        if fit_n @ seed_normal < 0:
                            fit_n, fit_d = -fit_n, -fit_d
                        plane_n, plane_d = fit_n, fit_d
                    since_refit = 0
        raw_regions.append(members)

    surviving: list[PlanarRegion] = []
    residue: list[int] = []
    for members in raw_regions:
        if len(members) < params.min_region_size:
            residue.extend(members)
            continue
        try:
            surviving.append(_finish_region(cloud, members))
        except DegenerateFitError:
            logger.warning("degenerate plane fit for region of %d points", len(members))
            residue.extend(members)
    surviving.sort(key=lambda r: (-len(r), int(r.point_indices[0])))
    return Segmentation(
        regions=tuple(surviving),
        residue_indices=np.array(sorted(residue), dtype=np.intp),
        cloud_size=n,
    )
