"""
Test suite for generation_service.
Runs the standing configuration (and, marked slow, a short walk) end to end on flat ground; solver failures are patched in.
"""

import json

import numpy as np
import pytest
from unittest.mock import patch

from app.core.dataset import list_clip_dirs, load_clip
from app.exceptions import ConfigError
from app.models import ClipRecord, Dataset
from app.schemas import PipelineConfig
from app.services import audit_service, generation_service
from app.utils.file_utils import directory_digest


def failing_plan_for(seeds):
    """Wrap the real planner so that the given seeds raise like an unbuildable problem."""
    real_plan = generation_service.plan

    def _plan(terrain, model, config, rng_seed, terrain_seed=None, solver=None):
        if rng_seed in seeds:
            raise ValueError(f"Goal stance off the terrain for seed {rng_seed}")
        return real_plan(terrain, model, config, rng_seed=rng_seed, terrain_seed=terrain_seed, solver=solver)

    return _plan


# ============================================================================
# Single Seed Tests
# ============================================================================

@pytest.mark.service
class TestRunSeed:
    def test_converged_seed_carries_clip(self, robot_model, standing_planner_config):
        job = generation_service.SeedJob(seed=3, planner_config=standing_planner_config, model=robot_model, flat=True)

        outcome = generation_service.run_seed(job)

        assert outcome.status == "converged"
        assert outcome.clip.n_frames == 101
        assert outcome.clip.rng_seed == 3
        assert outcome.iterations == 0

    def test_build_error_becomes_failed_outcome(self, robot_model, standing_planner_config):
        job = generation_service.SeedJob(seed=0, planner_config=standing_planner_config, model=robot_model, flat=True)

        with patch("app.services.generation_service.plan", side_effect=ValueError("off the terrain")):
            outcome = generation_service.run_seed(job)

        assert outcome.status == "failed"
        assert outcome.clip is None
        assert "off the terrain" in outcome.message

    def test_unexpected_error_propagates(self, robot_model, standing_planner_config):
        job = generation_service.SeedJob(seed=0, planner_config=standing_planner_config, model=robot_model, flat=True)

        with patch("app.services.generation_service.plan", side_effect=RuntimeError("boom")):
            with pytest.raises(RuntimeError, match="boom"):
                generation_service.run_seed(job)

    def test_seed_terrain(self):
        assert generation_service.seed_terrain(5, flat=True).heights.max() == 0.0
        assert generation_service.seed_terrain(5).heights.max() > 0.0


# ============================================================================
# Pipeline Tests
# ============================================================================

@pytest.mark.service
@pytest.mark.integration
class TestGenerateDataset:
    def test_writes_clips_and_summary(self, standing_dataset):
        clip_dirs = list_clip_dirs(standing_dataset)
        summary = generation_service.load_summary(standing_dataset)

        assert [d.name for d in clip_dirs] == ["clip_000000", "clip_000001"]
        assert summary.n_converged == 2
        assert summary.convergence_rate == 1.0
        assert summary.planner_config.n_stance_phases == 1
        assert all((d / "solution.json").exists() for d in clip_dirs)
        assert not (clip_dirs[0] / "terrain_distorted.txt").exists()

    def test_summary_is_plain_json(self, standing_dataset):
        data = json.loads((standing_dataset / "summary.json").read_text())

        assert data["name"] == "standing"
        assert [c["seed"] for c in data["clips"]] == [0, 1]
        assert data["clips"][0]["clip_dir"] == "clip_000000"

    def test_clip_payload_loads(self, standing_dataset, robot_model):
        clip = load_clip(standing_dataset / "clip_000001")

        assert clip.rng_seed == 1
        assert clip.terrain_seed == 1
        assert clip.horizon == 1.0
        assert clip.terrain_image.shape == (16, 16)

    def test_payload_is_deterministic(self, tmp_path, robot_model, standing_planner_config):
        digests = []
        for name in ("first", "second"):
            config = PipelineConfig(n_clips=2, output_dir=tmp_path / name, flat_terrain=True, name="run")
            generation_service.generate_dataset(config, standing_planner_config, robot_model)
            digests.append(directory_digest(config.output_dir))

        assert digests[0] == digests[1]

    @pytest.mark.slow
    def test_walking_dataset_is_consistent(self, tmp_path, robot_model, desk_planner_config):
        planner_config = desk_planner_config.model_copy(
            update={"solve": desk_planner_config.solve.model_copy(update={"time_budget_s": 60.0})}
        )
        config = PipelineConfig(n_clips=5, retries=5, output_dir=tmp_path / "walking", flat_terrain=True)

        summary = generation_service.generate_dataset(config, planner_config, robot_model)

        assert summary.n_converged == 5
        clip_dirs = list_clip_dirs(config.output_dir)
        assert len(clip_dirs) == 5
        for clip_dir in clip_dirs:
            clip = load_clip(clip_dir)
            assert clip.n_frames == 201
            flags = clip.contact_flags > 0.5
            for leg, durations in enumerate(clip.phase_durations):
                assert len(durations) == 2 * planner_config.n_stance_phases - 1
                assert np.count_nonzero(flags[1:, leg] != flags[:-1, leg]) == len(durations) - 1
        assert audit_service.audit_dataset(config.output_dir, robot_model).passed

    def test_failed_seed_is_skipped(self, tmp_path, robot_model, standing_planner_config):
        config = PipelineConfig(n_clips=2, output_dir=tmp_path / "out", flat_terrain=True)

        with patch("app.services.generation_service.plan", side_effect=failing_plan_for({0})):
            summary = generation_service.generate_dataset(config, standing_planner_config, robot_model)

        assert summary.n_attempted == 2
        assert summary.n_converged == 1
        assert summary.convergence_rate == 0.5
        assert summary.clips[0].status == "failed"
        assert summary.clips[0].clip_dir is None
        assert [d.name for d in list_clip_dirs(config.output_dir)] == ["clip_000001"]

    def test_retries_use_seeds_after_range(self, tmp_path, robot_model, standing_planner_config):
        config = PipelineConfig(n_clips=2, output_dir=tmp_path / "out", flat_terrain=True, retries=3)

        with patch("app.services.generation_service.plan", side_effect=failing_plan_for({0})):
            summary = generation_service.generate_dataset(config, standing_planner_config, robot_model)

        assert [c.seed for c in summary.clips] == [0, 1, 2]
        assert summary.n_converged == 2
        assert summary.convergence_rate == pytest.approx(2 / 3)
        assert [d.name for d in list_clip_dirs(config.output_dir)] == ["clip_000001", "clip_000002"]

    def test_retries_are_bounded(self, tmp_path, robot_model, standing_planner_config):
        config = PipelineConfig(n_clips=2, output_dir=tmp_path / "out", flat_terrain=True, retries=2)

        with patch("app.services.generation_service.plan", side_effect=failing_plan_for({0, 2, 3})):
            summary = generation_service.generate_dataset(config, standing_planner_config, robot_model)

        assert [c.seed for c in summary.clips] == [0, 1, 2, 3]
        assert summary.n_converged == 1

    def test_distortion_writes_distorted_terrain(self, tmp_path, robot_model, standing_planner_config):
        config = PipelineConfig(n_clips=1, output_dir=tmp_path / "out", flat_terrain=True, distortion=True)

        summary = generation_service.generate_dataset(config, standing_planner_config, robot_model)

        assert summary.distortion is True
        assert (config.output_dir / "clip_000000" / "terrain_distorted.txt").exists()

    def test_invalid_seed_range_raises(self, tmp_path, robot_model, standing_planner_config):
        config = PipelineConfig(n_clips=2, output_dir=tmp_path / "out", seed_base=2**32 - 1)

        with pytest.raises(ConfigError, match="Invalid seed range"):
            generation_service.generate_dataset(config, standing_planner_config, robot_model)

        assert not config.output_dir.exists()


# ============================================================================
# Catalog Tests
# ============================================================================

@pytest.mark.service
class TestCatalogRows:
    def test_rows_written_when_session_given(self, db_session, tmp_path, robot_model, standing_planner_config):
        config = PipelineConfig(n_clips=2, output_dir=tmp_path / "out", flat_terrain=True, name="cataloged")

        with patch("app.services.generation_service.plan", side_effect=failing_plan_for({1})):
            generation_service.generate_dataset(config, standing_planner_config, robot_model, db_session)

        dataset = db_session.query(Dataset).filter(Dataset.name == "cataloged").one()
        records = db_session.query(ClipRecord).filter(ClipRecord.dataset_id == dataset.id).order_by(ClipRecord.seed).all()
        assert dataset.status == "completed"
        assert dataset.convergence_rate == 0.5
        assert [r.status for r in records] == ["converged", "failed"]
        assert records[0].clip_path.endswith("clip_000000")
        assert records[1].clip_path is None

    def test_dataset_marked_failed_on_error(self, db_session, tmp_path, robot_model, standing_planner_config):
        config = PipelineConfig(n_clips=1, output_dir=tmp_path / "out", flat_terrain=True, name="broken")

        with patch("app.services.generation_service.plan", side_effect=RuntimeError("worker crashed")):
            with pytest.raises(RuntimeError):
                generation_service.generate_dataset(config, standing_planner_config, robot_model, db_session)

        dataset = db_session.query(Dataset).filter(Dataset.name == "broken").one()
        assert dataset.status == "failed"
