"""
Test suite for clip sampling, persistence and dataset statistics.
"""

import json

import numpy as np
import pytest

from app.core.dataset import (
    CHANNELS,
    MANIFEST_NAME,
    contact_onsets,
    dataset_stats,
    frame_count,
    list_clip_dirs,
    load_clip,
    reference_frame,
    sample_clip,
    save_clip,
    write_stats_tables,
)
from app.core.heightfield import flat_terrain
from app.core.planner import plan
from app.core.robot_model import robot_model_hash
from app.exceptions import ClipFormatError


class TestFrameCount:

    def test_frame_count(self):
        assert frame_count(4.6) == 461
        assert frame_count(2.0) == 201
        assert frame_count(1.0, rate_hz=50.0) == 51


# ============================================================================
# Sampling
# ============================================================================

class TestSampleClip:

    def test_standing_clip(self, robot_model, standing_planner_config):
        terrain = flat_terrain()
        solution = plan(terrain, robot_model, standing_planner_config, rng_seed=0)

        clip = sample_clip(solution, terrain, robot_model)

        assert clip.n_frames == 101
        assert clip.com_pos.dtype == np.float32
        np.testing.assert_array_equal(clip.contact_flags, 1.0)
        np.testing.assert_allclose(np.linalg.norm(clip.base_quat.astype(float), axis=1), 1.0, atol=1e-6)
        np.testing.assert_allclose(clip.base_quat[:, 0], 1.0, atol=1e-6)
        np.testing.assert_allclose(clip.qdot, 0.0, atol=1e-3)
        assert clip.robot_hash == robot_model_hash(robot_model)
        assert clip.phase_durations == ((1.0,),) * 4

    def test_channel_shapes(self, clip_factory):
        clip = clip_factory()

        for name, shape in CHANNELS.items():
            assert clip.channel(name).shape == (clip.n_frames,) + shape

    def test_unknown_channel_raises(self, clip_factory):
        with pytest.raises(KeyError):
            clip_factory().channel("torques")


# ============================================================================
# Persistence
# ============================================================================

class TestPersistence:

    def test_round_trip_is_bit_exact(self, tmp_path, clip_factory):
        clip = clip_factory(terrain=flat_terrain(0.05))

        save_clip(clip, tmp_path / "clip_000007")
        loaded = load_clip(tmp_path / "clip_000007")

        for name in CHANNELS:
            np.testing.assert_array_equal(loaded.channel(name), clip.channel(name))
        np.testing.assert_array_equal(loaded.terrain.heights, clip.terrain.heights)
        assert loaded.horizon == clip.horizon
        assert loaded.rng_seed == 7
        assert loaded.phase_durations == clip.phase_durations

    def test_truncated_channel_raises(self, tmp_path, clip_factory):
        directory = tmp_path / "clip"
        save_clip(clip_factory(), directory)
        payload = directory / "q.f32"
        payload.write_bytes(payload.read_bytes()[:-4])

        with pytest.raises(ClipFormatError) as exc_info:
            load_clip(directory)
        assert exc_info.value.channel == "q"

    def test_missing_manifest_raises(self, tmp_path):
        with pytest.raises(ClipFormatError, match="manifest missing"):
            load_clip(tmp_path)

    def test_manifest_shape_mismatch_raises(self, tmp_path, clip_factory):
        directory = tmp_path / "clip"
        manifest_path = save_clip(clip_factory(), directory)
        manifest = json.loads(manifest_path.read_text())
        manifest["channels"]["ee_pos"] = [12]
        manifest_path.write_text(json.dumps(manifest))

        with pytest.raises(ClipFormatError, match="ee_pos"):
            load_clip(directory)

    def test_list_clip_dirs(self, tmp_path, clip_factory):
        for seed in (3, 1, 2):
            save_clip(clip_factory(rng_seed=seed), tmp_path / f"clip_{seed:06d}")
        (tmp_path / "stats").mkdir()

        assert [p.name for p in list_clip_dirs(tmp_path)] == ["clip_000001", "clip_000002", "clip_000003"]
        assert (tmp_path / "clip_000001" / MANIFEST_NAME).exists()


# ============================================================================
# Contacts and Statistics
# ============================================================================

class TestContacts:

    def test_onsets_at_start_and_touch_down(self, clip_factory):
        onsets = contact_onsets(clip_factory())

        assert len(onsets) == 8
        assert sorted({o.frame for o in onsets}) == [0, 101]
        first = [o for o in onsets if o.frame == 0 and o.leg == 0][0]
        assert first.x == pytest.approx(0.277, abs=1e-6)
        assert first.y == pytest.approx(0.234, abs=1e-6)

    def test_stats_tables(self, tmp_path, clip_factory):
        clips = [clip_factory(rng_seed=1), clip_factory(rng_seed=2, vx=0.5)]

        stats = dataset_stats(clips)
        contacts_path, velocity_path = write_stats_tables(stats, tmp_path / "stats")

        assert len(stats.contacts) == 16
        assert len(stats.velocity) == 2 * 201
        assert contacts_path.read_text().splitlines()[0] == "clip\tleg\tframe\tx\ty"
        assert len(velocity_path.read_text().splitlines()) == 1 + 2 * 201
        assert stats.velocity[-1][3] == pytest.approx(0.5)

    def test_x_limit_filters_onsets(self, clip_factory):
        stats = dataset_stats([clip_factory()], x_limit=0.0)

        assert all(x <= 0.0 for _, _, _, x, _ in stats.contacts)
        assert {leg for _, leg, _, _, _ in stats.contacts} == {2, 3}

    def test_stats_need_clips(self):
        with pytest.raises(ValueError, match="at least one clip"):
            dataset_stats([])


class TestReferenceFrame:

    def test_base_maps_to_com(self, clip_factory):
        clip = clip_factory()

        state = reference_frame(clip, 100)

        np.testing.assert_allclose(state.body_positions[0], clip.com_pos[100])
        np.testing.assert_allclose(state.body_positions[1:], clip.ee_pos[100])

    def test_out_of_range_raises(self, clip_factory):
        with pytest.raises(IndexError):
            reference_frame(clip_factory(), 201)

    def test_unknown_body_raises(self, clip_factory):
        with pytest.raises(ValueError, match="Unknown body"):
            reference_frame(clip_factory(), 0, bodies=("tail",))
