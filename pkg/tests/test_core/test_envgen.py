"""
Test suite for evaluation terrain builders.
"""

import numpy as np
import pytest

from app.core.envgen import (
    BASE_LEVEL,
    BUILDERS,
    RASTER_CELL,
    Box,
    audit_track,
    build_mixed,
    build_perlin_segment,
    build_procedural_track,
    build_slits_segment,
    build_stairs,
    build_wavy_steps,
    export_boxes_text,
    offset_overlapping,
    rasterize_boxes,
    wavy_elevation,
)
from app.core.heightfield import flat_terrain, height_at
from app.schemas import SegmentSpec, StairsParams, TrackSpec


# ============================================================================
# Stairs
# ============================================================================

class TestStairs:

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_passes_audit(self, seed):
        track = build_stairs(seed)

        assert audit_track(track.spec) == []
        assert len(track.boxes) == 60

    def test_monotone_ascent(self):
        track = build_stairs(7)
        stairs = track.spec.segments[1]

        end_level = track.spec.segments[2].params["level"]
        assert end_level == pytest.approx(sum(stairs.params["step_heights"]))
        assert all(0.0 <= h <= 0.10 for h in stairs.params["step_heights"])

    def test_box_shifts_are_whole_offsets(self):
        track = build_stairs(11, StairsParams(spread_range=(0.0, 0.1)))

        shifts = np.array(track.spec.segments[1].params["box_shifts"])
        np.testing.assert_allclose(shifts / 0.05, np.round(shifts / 0.05), atol=1e-9)
        assert shifts.max() > 0.0

    def test_same_seed_same_track(self):
        np.testing.assert_array_equal(build_stairs(5).field.heights, build_stairs(5).field.heights)

    def test_layout_is_contiguous(self):
        spec = build_stairs(2).spec

        assert spec.segments[0].x_start == 0.0
        for previous, segment in zip(spec.segments, spec.segments[1:]):
            assert previous.x_start + previous.length == pytest.approx(segment.x_start)


# ============================================================================
# Other Tracks
# ============================================================================

class TestTracks:

    def test_sine_is_zero_at_six_meters(self):
        assert wavy_elevation(6.0) == pytest.approx(0.0)
        assert wavy_elevation(6.0 + 1.5 * np.pi) == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_wavy_passes_audit(self, seed):
        track = build_wavy_steps(seed)

        assert audit_track(track.spec) == []
        assert len(track.boxes) % 2 == 0
        assert track.field.heights.min() >= 0.0

    def test_wavy_step_tops_are_rasterized(self):
        track = build_wavy_steps(4)
        box = track.boxes[0]

        h, _ = height_at(track.field, box.top_center[:2])
        assert h >= box.top_center[2] - 0.02

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_slits_pass_audit(self, seed):
        track = build_slits_segment(seed)

        assert audit_track(track.spec) == []
        levels = np.unique(np.round(track.field.heights, 9))
        np.testing.assert_allclose(levels, [BASE_LEVEL - 0.72, BASE_LEVEL])

    def test_perlin_segment_range_and_spacing(self):
        for seed in range(5):
            field = build_perlin_segment(np.random.default_rng(seed))
            assert field.heights.min() == pytest.approx(0.0)
            assert field.heights.max() == pytest.approx(0.5)
            assert field.cell_size == pytest.approx(1.0 / 65.0)

    @pytest.mark.slow
    def test_procedural_track(self):
        track = build_procedural_track(0)

        assert track.spec.total_length == pytest.approx(78.0)
        assert track.field.rows == int(round(78.0 / RASTER_CELL)) + 1
        assert audit_track(track.spec) == []

    @pytest.mark.slow
    def test_mixed_track(self):
        track = build_mixed(3)

        assert len(track.spec.segments) == 15
        assert audit_track(track.spec) == []

    def test_mixed_forced_kinds(self):
        track = build_mixed(1, kinds=["slits", "stairs", "perlin"])

        assert [s.kind for s in track.spec.segments] == ["slits", "stairs", "perlin"]
        assert audit_track(track.spec) == []

    def test_mixed_unknown_kind_raises(self):
        with pytest.raises(ValueError, match="Unknown segment kinds"):
            build_mixed(0, kinds=["lava"])

    def test_builders_registry(self):
        assert set(BUILDERS) == {"stairs", "procedural", "wavy", "mixed", "slits", "perlin"}

    @pytest.mark.slow
    @pytest.mark.parametrize("builder", [build_stairs, build_wavy_steps, build_mixed])
    def test_parameters_stay_in_range_over_seeds(self, builder):
        for seed in range(1000):
            track = builder(seed, render=False)

            assert track.field is None
            assert audit_track(track.spec) == [], seed


# ============================================================================
# Helpers and Audit
# ============================================================================

class TestHelpers:

    def test_offset_overlapping_single_pass(self):
        placed = [(0.0, 0.0), (0.05, 0.0), (2.0, 2.0)]

        assert offset_overlapping(0.0, 0.0, placed, 0.2, 0.05) == pytest.approx(0.10)
        assert offset_overlapping(1.0, 1.0, placed, 0.2, 0.05) == 1.0

    def test_rasterize_flat_box(self):
        field = flat_terrain(0.0, grid=(20, 20), footprint=(1.0, 1.0), origin=(0.0, 0.0))
        box = Box(center=[0.5, 0.5, 0.05], half_extents=[0.1, 0.1, 0.05])

        raised = rasterize_boxes([box], field)

        assert raised.heights.max() == pytest.approx(0.1)
        assert height_at(raised, (0.5, 0.5))[0] == pytest.approx(0.1)
        assert height_at(raised, (0.9, 0.9))[0] == 0.0

    def test_export_boxes_text(self, tmp_path):
        track = build_stairs(0)

        path = export_boxes_text(track.boxes, tmp_path / "boxes.txt")

        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) == 61
        assert len(lines[1].split()) == 9

    def test_audit_detects_gap_and_range(self):
        spec = TrackSpec(kind="slits", rng_seed=0, base_level=1.0, segments=[
            SegmentSpec(kind="slits", x_start=0.0, length=3.0, params={"platforms": [0.5], "gaps": [0.3]}),
            SegmentSpec(kind="platform", x_start=3.5, length=1.0, params={"level": 1.0}),
        ])

        errors = audit_track(spec)

        assert any("Gap between segments" in e for e in errors)
        assert any("gap 0.300000" in e for e in errors)
