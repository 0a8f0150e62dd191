import numpy as np
import pytest

from graspkit.cloud import PointCloud
from graspkit.planner import (
    RESULT_NO_CANDIDATES,
    RESULT_OK,
    RESULT_SEGMENTATION_EMPTY,
    PlannerConfig,
    load_config,
    plan,
)
from graspkit.shapes import ShapeSpec, generate


class TestConfig:
    def test_defaults_valid(self):
        PlannerConfig()

    def test_invalid_values_rejected(self):
        with pytest.raises(ValueError):
            PlannerConfig(mu=0.0)
        with pytest.raises(ValueError):
            PlannerConfig(closure_mode="loose")
        with pytest.raises(ValueError):
            PlannerConfig(angle_threshold_deg=120.0)

    def test_file_round_trip(self, tmp_path):
        config = PlannerConfig(mu=0.7, trials=50, sigmas=(0.01, 0.02))
        path = tmp_path / "planner.cfg"
        path.write_text(config.to_text())
        loaded = load_config(path, env=False)
        assert loaded == config

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("grip_strength = 11\n")
        with pytest.raises(ValueError, match="unknown key"):
            load_config(path, env=False)

    def test_comments_and_blanks_allowed(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# tuned for tests\n\nmu = 0.8  # rubber fingertips\n")
        assert load_config(path, env=False).mu == 0.8

    def test_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GRASPKIT_MU", "0.9")
        monkeypatch.setenv("GRASPKIT_TRIALS", "7")
        config = load_config(None, env=True)
        assert config.mu == 0.9
        assert config.trials == 7

    def test_hash_tracks_values(self):
        assert PlannerConfig().sha256() != PlannerConfig(mu=0.6).sha256()


class TestPlan:
    def test_box_grasp_geometry(self, default_config):
        dims = (0.05, 0.075, 0.05)
        cloud = generate(ShapeSpec("box", dims, density=1.2e5))
        result = plan(cloud, default_config)
        assert result.result_code == RESULT_OK
        best = result.best
        # the axis aligns with a face normal and the width matches that span
        axis = np.abs(best.candidate.grasp_axis)
        dominant = int(np.argmax(axis))
        angle = np.degrees(np.arccos(np.clip(axis[dominant], -1, 1)))
        assert angle < 2.0
        assert best.candidate.width == pytest.approx(
            dims[dominant], abs=default_config.voxel_size
        )
        assert best.closure

    def test_sphere_axis_through_center(self, sphere_cloud, default_config):
        result = plan(sphere_cloud, default_config)
        assert result.ok
        cand = result.best.candidate
        center = np.zeros(3)
        d = np.linalg.norm(np.cross(center - cand.contact_a, cand.grasp_axis))
        assert d <= 2 * default_config.voxel_size

    def test_scattered_points_segmentation_empty(self, default_config):
        rng = np.random.default_rng(3)
        cloud = PointCloud(rng.uniform(0, 1, (5, 3)))
        result = plan(cloud, default_config)
        assert result.result_code == RESULT_SEGMENTATION_EMPTY
        assert result.best is None

    def test_open_shell_no_candidates(self, corpus, default_config):
        cloud = generate(corpus["clamp_c_open"])
        result = plan(cloud, default_config)
        assert result.result_code == RESULT_NO_CANDIDATES
        assert result.n_regions > 0
        assert result.best is None

    def test_repeat_runs_byte_identical(self, box_cloud, default_config):
        a = plan(box_cloud, default_config).to_json()
        b = plan(box_cloud, default_config).to_json()
        assert a == b

    def test_timings_recorded_but_not_serialized(self, box_cloud, default_config):
        result = plan(box_cloud, default_config)
        assert set(result.timings_ms) >= {"preprocess", "segment", "candidates", "rank"}
        assert "timings" not in result.to_json()

    def test_metadata_hashes(self, box_cloud, default_config):
        result = plan(box_cloud, default_config)
        data = result.to_json_dict()
        meta = data["pipeline_metadata"]
        assert meta["config_sha256"] == default_config.sha256()
        assert len(meta["input_sha256"]) == 64
        assert data["schema_version"] == 1

    def test_best_is_head_of_reports(self, box_cloud, default_config):
        result = plan(box_cloud, default_config)
        assert result.best is result.all_reports[0]

    def test_empty_cloud_rejected(self, default_config):
        with pytest.raises(ValueError):
            plan(PointCloud(np.empty((0, 3))), default_config)
