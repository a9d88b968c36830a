"""
Test suite for audit_service.
"""

from dataclasses import replace

import numpy as np
import pytest

from app.core.dataset import QUATERNION_NORM_TOL, STORED_QUATERNION_NORM_TOL, save_clip
from app.services import audit_service
from app.utils.rotations import euler_to_quaternion


# ============================================================================
# Clip Invariant Tests
# ============================================================================

@pytest.mark.service
class TestCheckClip:
    def test_consistent_clip_passes(self, clip_factory, robot_model):
        assert audit_service.check_clip(clip_factory(), robot_model) == []

    def test_frame_count_mismatch(self, clip_factory):
        clip = clip_factory(horizon=2.0)
        short = replace(clip, horizon=1.5)

        failures = audit_service.check_clip(short)

        assert failures == ["201 frames, expected 151"]

    def test_quaternion_norm(self, clip_factory):
        clip = clip_factory()
        clip.base_quat[10] = [0.9, 0.0, 0.0, 0.0]

        failures = audit_service.check_clip(clip)

        assert len(failures) == 1
        assert failures[0].startswith("quaternion norm error")

    def test_float32_quaternions_stay_within_stored_tolerance(self, clip_factory):
        rng = np.random.default_rng(0)
        euler = rng.uniform(-np.pi, np.pi, size=(201, 3)) * np.array([0.3, 0.3, 1.0])
        quat = euler_to_quaternion(euler)
        clip = clip_factory()
        clip.base_quat[:] = quat.astype(np.float32)

        stored = np.linalg.norm(clip.base_quat.astype(np.float64), axis=1)

        np.testing.assert_allclose(np.linalg.norm(quat, axis=1), 1.0, atol=QUATERNION_NORM_TOL)
        assert np.abs(stored - 1.0).max() <= STORED_QUATERNION_NORM_TOL
        assert audit_service.check_clip(clip) == []

    def test_contact_changes_against_schedule(self, clip_factory):
        clip = clip_factory()
        clip.contact_flags[150:160, 2] = 0.0

        failures = audit_service.check_clip(clip)

        assert failures == ["leg 2: 4 contact changes, schedule has 3 phases"]

    def test_robot_hash(self, clip_factory, robot_model):
        clip = clip_factory()
        foreign = replace(clip, robot_hash="0" * 64)

        assert audit_service.check_clip(foreign) == []
        assert audit_service.check_clip(foreign, robot_model) == ["robot hash differs from the current robot description"]


# ============================================================================
# Dataset Audit Tests
# ============================================================================

@pytest.mark.service
@pytest.mark.integration
class TestAuditDataset:
    def test_generated_dataset_passes(self, standing_dataset, robot_model):
        result = audit_service.audit_dataset(standing_dataset, robot_model)

        assert result.passed, result.failures
        assert result.n_clips == 2
        assert result.n_failed == 0

    def test_missing_solution_is_a_failure(self, standing_dataset, robot_model):
        (standing_dataset / "clip_000001" / "solution.json").unlink()

        result = audit_service.audit_dataset(standing_dataset, robot_model)

        assert not result.passed
        assert result.n_failed == 1
        assert result.failures == ["clip_000001: solution.json missing"]

    def test_truncated_channel_is_a_failure(self, standing_dataset, robot_model):
        path = standing_dataset / "clip_000000" / "qdot.f32"
        path.write_bytes(path.read_bytes()[:-4])

        result = audit_service.audit_dataset(standing_dataset, robot_model)

        assert result.n_failed == 1
        assert result.failures[0].startswith("clip_000000: unreadable (qdot)")

    def test_clips_without_summary_use_fallback_config(self, tmp_path, clip_factory, robot_model):
        save_clip(clip_factory(), tmp_path / "clip_000000")

        result = audit_service.audit_dataset(tmp_path, robot_model)

        assert result.n_clips == 1
        assert result.failures == ["clip_000000: solution.json missing"]

    def test_empty_directory_raises(self, tmp_path, robot_model):
        with pytest.raises(ValueError, match="No clips found"):
            audit_service.audit_dataset(tmp_path, robot_model)

    def test_missing_directory_raises(self, tmp_path, robot_model):
        with pytest.raises(ValueError, match="No clips found"):
            audit_service.audit_dataset(tmp_path / "nowhere", robot_model)
