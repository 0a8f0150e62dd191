import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graspkit.candidates import (
    candidates_to_json,
    find_antiparallel_pairs,
    make_candidates,
    overlap_region,
    plane_frame,
    project_to_common_plane,
)
from graspkit.cloud import PointCloud
from graspkit.regions import segment
from graspkit.shapes import ShapeSpec, generate

from conftest import planar_grid


def parallel_grid_cloud(gap=0.05, nx=20, ny=20, spacing=0.005, offset_xy=(0.0, 0.0)):
    """Two facing grids: z=0 with +Z normals and z=gap with -Z normals."""
    lower_pts, lower_n, lower_c = planar_grid(nx, ny, spacing, z=0.0, normal_sign=1.0)
    upper_pts, upper_n, upper_c = planar_grid(nx, ny, spacing, z=gap, normal_sign=-1.0)
    upper_pts = upper_pts + np.array([offset_xy[0], offset_xy[1], 0.0])
    pts = np.vstack([lower_pts, upper_pts])
    normals = np.vstack([lower_n, upper_n])
    return PointCloud(pts, normals, np.zeros(len(pts)))


def segment_pair_cloud(cloud):
    seg = segment(cloud)
    assert len(seg) == 2
    return seg, cloud


class TestFindPairs:
    def test_exact_antiparallel_pair(self):
        seg, cloud = segment_pair_cloud(parallel_grid_cloud(gap=0.05))
        pairs = find_antiparallel_pairs(seg.regions, max_angle_deg=10.0, max_width=0.1)
        assert len(pairs) == 1
        pair = pairs[0]
        assert pair.antiparallel_angle_deg == pytest.approx(0.0, abs=1e-9)
        np.testing.assert_allclose(np.abs(pair.common_normal), [0, 0, 1], atol=1e-12)
        assert pair.separation == pytest.approx(0.05, abs=1e-12)

    def test_width_filter(self):
        seg, cloud = segment_pair_cloud(parallel_grid_cloud(gap=0.05))
        assert find_antiparallel_pairs(seg.regions, max_angle_deg=10.0, max_width=0.03) == []

    def test_separation_is_orientation_independent(self):
        # outward-oriented variant of the same two planes pairs identically
        lower_pts, _, _ = planar_grid(10, 10, 0.005, z=0.0)
        upper_pts, _, _ = planar_grid(10, 10, 0.005, z=0.05)
        pts = np.vstack([lower_pts, upper_pts])
        normals = np.vstack(
            [np.tile([0.0, 0, -1], (100, 1)), np.tile([0.0, 0, 1], (100, 1))]
        )
        cloud = PointCloud(pts, normals, np.zeros(200))
        seg = segment(cloud)
        assert len(seg) == 2
        pairs = find_antiparallel_pairs(seg.regions, 10.0, 0.1)
        assert len(pairs) == 1
        assert pairs[0].separation == pytest.approx(0.05, abs=1e-12)

    def test_cube_faces_give_three_pairs(self, box_cloud):
        seg = segment(box_cloud)
        assert len(seg) == 6
        pairs = find_antiparallel_pairs(seg.regions, max_angle_deg=15.0, max_width=0.1)
        assert len(pairs) == 3
        # oracle: enumerate all 15 pairs with direct geometry checks
        regions = list(seg.regions)
        expected = 0
        for i in range(6):
            for j in range(i + 1, 6):
                cos_dev = regions[i].plane_normal @ -regions[j].plane_normal
                if np.degrees(np.arccos(np.clip(cos_dev, -1, 1))) > 15.0:
                    continue
                expected += 1
        assert expected == 3

    def test_sorted_by_angle(self, sphere_cloud):
        seg = segment(sphere_cloud)
        pairs = find_antiparallel_pairs(seg.regions, 15.0, 0.085)
        angles = [p.antiparallel_angle_deg for p in pairs]
        assert angles == sorted(angles)


class TestProjection:
    def test_axis_aligned_z(self):
        frame = plane_frame(np.array([0.0, 0.0, 1.0]))
        xy = frame.to_plane(np.array([[1.0, 2.0, 3.0]]))
        np.testing.assert_allclose(xy[0], [1.0, 2.0], atol=1e-12)

    def test_axis_aligned_x_fallback(self):
        frame = plane_frame(np.array([1.0, 0.0, 0.0]))
        yz = frame.to_plane(np.array([[5.0, 1.0, 1.0]]))
        np.testing.assert_allclose(yz[0], [1.0, 1.0], atol=1e-12)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_projection_properties(self, seed):
        rng = np.random.default_rng(seed)
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        p = rng.normal(size=3)
        frame = plane_frame(n)
        xy = frame.to_plane(p)[0]
        q = xy[0] * frame.u + xy[1] * frame.v
        # q is p with its normal component removed
        assert abs(q @ n) < 1e-9
        assert abs(np.linalg.norm(p - q) - abs(p @ n)) < 1e-9


class TestOverlap:
    def box_corners(self, lo, hi):
        return np.array([[lo, lo], [hi, lo], [lo, hi], [hi, hi]], dtype=float)

    def test_box_intersection(self):
        box = overlap_region(self.box_corners(0, 2), self.box_corners(1, 3))
        np.testing.assert_allclose(box.lo, [1, 1])
        np.testing.assert_allclose(box.hi, [2, 2])

    def test_disjoint_boxes_empty(self):
        assert overlap_region(self.box_corners(0, 1), self.box_corners(2, 3)) is None

    def test_min_points_filter(self):
        assert (
            overlap_region(self.box_corners(0, 2), self.box_corners(1, 3), min_points=2)
            is None
        )

    def test_half_overlapping_patches(self):
        # 20x20 grids offset by half their extent in both axes
        a = np.array([[i, j] for i in range(20) for j in range(20)], dtype=float)
        b = a + 10.0
        box = overlap_region(a, b)
        assert int(box.contains(a).sum()) == 100
        assert int(box.contains(b).sum()) == 100


class TestMakeCandidates:
    def test_full_overlap_centroid_candidate(self):
        cloud = parallel_grid_cloud(gap=0.05)
        seg = segment(cloud)
        pair = find_antiparallel_pairs(seg.regions, 10.0, 0.1)[0]
        cands = make_candidates(pair, cloud, n_per_pair=1, max_width=0.1)
        assert len(cands) == 1
        cand = cands[0]
        axis_angle = np.degrees(
            np.arccos(np.clip(abs(cand.grasp_axis @ pair.common_normal), -1, 1))
        )
        assert axis_angle < 1.0
        assert cand.width == pytest.approx(0.05, abs=1e-9)
        # contact on one of the four points adjacent to the shared centroid,
        # deterministic by the lowest-index tie-break
        np.testing.assert_allclose(cand.contact_a[:2], [-0.0025, -0.0025], atol=1e-9)
        np.testing.assert_allclose(cand.contact_b[:2], cand.contact_a[:2], atol=1e-9)

    def test_single_pair_overlap(self):
        # only the two closest corner points project within the threshold
        cloud = parallel_grid_cloud(gap=0.03, nx=2, ny=2, spacing=0.04)
        seg = segment(
            cloud,
            params=__import__("graspkit.regions", fromlist=["RegionGrowingParams"]).RegionGrowingParams(
                min_region_size=3, k_neighbors=4
            ),
        )
        pairs = find_antiparallel_pairs(seg.regions, 10.0, 0.1)
        assert len(pairs) == 1
        cands = make_candidates(pairs[0], cloud, n_per_pair=5, max_width=0.1, distance_threshold=0.005)
        # grid spacing 0.04 >> threshold: only exact-projection matches remain
        for c in cands:
            np.testing.assert_allclose(c.contact_a[:2], c.contact_b[:2], atol=1e-9)

    def test_width_filter_drops_all(self):
        cloud = parallel_grid_cloud(gap=0.05)
        seg = segment(cloud)
        pair = find_antiparallel_pairs(seg.regions, 10.0, 0.06)[0]
        assert make_candidates(pair, cloud, n_per_pair=3, max_width=0.01) == []

    def test_contacts_are_cloud_members_inside_box(self):
        cloud = parallel_grid_cloud(gap=0.05, offset_xy=(0.02, 0.02))
        seg = segment(cloud)
        pair = find_antiparallel_pairs(seg.regions, 10.0, 0.1)[0]
        cands = make_candidates(pair, cloud, n_per_pair=5, max_width=0.1)
        assert cands
        proj_a, proj_b, frame = project_to_common_plane(pair, cloud)
        box = overlap_region(proj_a, proj_b)
        for c in cands:
            assert c.contact_index_a in pair.region_a.point_indices
            assert c.contact_index_b in pair.region_b.point_indices
            pa = frame.to_plane(c.contact_a)[0]
            pb = frame.to_plane(c.contact_b)[0]
            assert box.contains(pa + 0).all() or np.linalg.norm(pa - np.clip(pa, box.lo, box.hi)) <= 0.005
            assert box.contains(pb + 0).all() or np.linalg.norm(pb - np.clip(pb, box.lo, box.hi)) <= 0.005

    def test_swap_symmetry(self):
        cloud = parallel_grid_cloud(gap=0.05, offset_xy=(0.012, -0.007))
        seg = segment(cloud)
        pair = find_antiparallel_pairs(seg.regions, 10.0, 0.1)[0]
        forward = make_candidates(pair, cloud, n_per_pair=5, max_width=0.1)
        backward = make_candidates(pair.swapped(), cloud, n_per_pair=5, max_width=0.1)
        assert len(forward) == len(backward)
        for f, b in zip(forward, backward):
            np.testing.assert_array_equal(f.contact_a, b.contact_b)
            np.testing.assert_array_equal(f.contact_b, b.contact_a)
            np.testing.assert_array_equal(f.normal_a, b.normal_b)

    def test_inward_normals_face_each_other(self):
        cloud = parallel_grid_cloud(gap=0.05)
        seg = segment(cloud)
        pair = find_antiparallel_pairs(seg.regions, 10.0, 0.1)[0]
        cand = make_candidates(pair, cloud, n_per_pair=1, max_width=0.1)[0]
        assert cand.normal_a @ (cand.contact_b - cand.contact_a) > 0
        assert cand.normal_b @ (cand.contact_a - cand.contact_b) > 0

    def test_confidence_weighting_prefers_trusted_points(self):
        cloud = parallel_grid_cloud(gap=0.05)
        # distrust the exact centroid-nearest point of the lower grid
        seg = segment(cloud)
        pair = find_antiparallel_pairs(seg.regions, 10.0, 0.1)[0]
        baseline = make_candidates(pair, cloud, n_per_pair=1, max_width=0.1)[0]
        conf = np.ones(len(cloud))
        conf[baseline.contact_index_a] = 1e-6
        weighted_cloud = PointCloud(cloud.points, cloud.normals, cloud.curvatures, conf)
        seg2 = segment(weighted_cloud)
        pair2 = find_antiparallel_pairs(seg2.regions, 10.0, 0.1)[0]
        cand = make_candidates(pair2, weighted_cloud, n_per_pair=1, max_width=0.1)[0]
        assert cand.contact_index_a != baseline.contact_index_a

    def test_deterministic(self, sphere_cloud):
        seg = segment(sphere_cloud)
        pairs = find_antiparallel_pairs(seg.regions, 15.0, 0.085)
        a = [make_candidates(p, sphere_cloud, 5, 0.085, min_points=20) for p in pairs]
        b = [make_candidates(p, sphere_cloud, 5, 0.085, min_points=20) for p in pairs]
        assert json.loads(candidates_to_json(sum(a, []))) == json.loads(
            candidates_to_json(sum(b, []))
        )

    def test_json_export_fields(self):
        cloud = parallel_grid_cloud(gap=0.05)
        seg = segment(cloud)
        pair = find_antiparallel_pairs(seg.regions, 10.0, 0.1)[0]
        cands = make_candidates(pair, cloud, n_per_pair=2, max_width=0.1)
        records = json.loads(candidates_to_json(cands))
        for rec in records:
            assert set(rec) == {
                "contact_a",
                "contact_b",
                "normal_a",
                "normal_b",
                "width",
                "pair_angle_deg",
            }
