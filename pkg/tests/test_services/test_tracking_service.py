"""
Test suite for tracking_service.
"""

import math

import pytest

from app.core.dataset import save_clip
from app.exceptions import ClipFormatError
from app.schemas import TrackingConfig, TrackingRewardRequest, TrackingStateInput
from app.services import tracking_service


def state_input(**overrides) -> TrackingStateInput:
    values = {
        "body_positions": [(0.0, 0.0, 0.5)] * 5,
        "joint_positions": [0.0] * 12,
        "com_pos": (0.0, 0.0, 0.5),
        "com_linvel": (0.0, 0.0, 0.0),
        "com_angvel": (0.0, 0.0, 0.0),
        "base_quat": (1.0, 0.0, 0.0, 0.0),
        "ee_pos": [(0.0, 0.0, 0.0)] * 4,
    }
    values.update(overrides)
    return TrackingStateInput(**values)


# ============================================================================
# Single State Tests
# ============================================================================

@pytest.mark.service
class TestEvaluateRewards:
    def test_perfect_tracking(self):
        request = TrackingRewardRequest(sim=state_input(), ref=state_input())

        result = tracking_service.evaluate_rewards(request)

        assert result.total == pytest.approx(1.0)
        assert result.epsilon == 0.0
        assert result.r_trunc == 1.0
        assert result.terminate is False
        assert result.finetune_reward is None

    def test_joint_error_terminates(self):
        request = TrackingRewardRequest(sim=state_input(joint_positions=[0.6] * 12), ref=state_input())

        result = tracking_service.evaluate_rewards(request)

        assert result.epsilon == pytest.approx(0.6)
        assert result.r_trunc == pytest.approx(-0.2)
        assert result.terminate is True

    def test_custom_tau(self):
        request = TrackingRewardRequest(sim=state_input(joint_positions=[0.6] * 12), ref=state_input())

        result = tracking_service.evaluate_rewards(request, TrackingConfig(tau=1.0))

        assert result.terminate is False
        assert result.r_trunc == pytest.approx(0.4)

    def test_finetune_reward(self):
        sim = state_input(com_linvel=(0.5, 0.0, 0.0), com_pos=(0.0, 0.1, 0.5))
        request = TrackingRewardRequest(sim=sim, ref=state_input(), finetune=True)

        result = tracking_service.evaluate_rewards(request)

        assert result.finetune_reward == pytest.approx(0.2 * math.exp(-0.8))

    def test_non_unit_quaternion(self):
        request = TrackingRewardRequest(sim=state_input(base_quat=(0.9, 0.0, 0.0, 0.0)), ref=state_input())

        with pytest.raises(ValueError, match="unit-norm"):
            tracking_service.evaluate_rewards(request)

    def test_body_count_mismatch(self):
        request = TrackingRewardRequest(sim=state_input(body_positions=[(0.0, 0.0, 0.5)] * 3), ref=state_input())

        with pytest.raises(ValueError, match="Body count mismatch"):
            tracking_service.evaluate_rewards(request)


# ============================================================================
# Trace Tests
# ============================================================================

@pytest.mark.service
class TestTraceDirs:
    def test_self_tracking(self, tmp_path, clip_factory):
        save_clip(clip_factory(), tmp_path / "ref")

        evaluation = tracking_service.evaluate_trace_dirs(tmp_path / "ref", tmp_path / "ref")

        assert evaluation.total.shape == (201,)
        assert evaluation.total.min() == pytest.approx(1.0)
        assert evaluation.first_termination is None

    def test_drifting_trace_terminates(self, tmp_path, clip_factory):
        save_clip(clip_factory(vx=1.0), tmp_path / "sim")
        save_clip(clip_factory(vx=0.0), tmp_path / "ref")

        evaluation = tracking_service.evaluate_trace_dirs(tmp_path / "sim", tmp_path / "ref")

        assert evaluation.first_termination is not None
        assert 140 < evaluation.first_termination < 160
        assert not evaluation.terminate[:140].any()

    def test_missing_clip(self, tmp_path, clip_factory):
        save_clip(clip_factory(), tmp_path / "ref")

        with pytest.raises(ClipFormatError):
            tracking_service.evaluate_trace_dirs(tmp_path / "missing", tmp_path / "ref")

    def test_trace_table(self, tmp_path, clip_factory):
        save_clip(clip_factory(), tmp_path / "ref")
        evaluation = tracking_service.evaluate_trace_dirs(tmp_path / "ref", tmp_path / "ref", finetune=True)

        path = tracking_service.write_trace_table(evaluation, tmp_path / "out" / "rewards.tsv")

        lines = path.read_text().splitlines()
        assert len(lines) == 202
        assert lines[0].split("\t")[-1] == "finetune"
        assert lines[1].split("\t")[:2] == ["0", "0.200000"]
        assert lines[1].split("\t")[9] == "0"
