"""
Test suite for distortion_service.
"""

from dataclasses import replace

import numpy as np
import pytest

from app.core.dataset import contact_onsets
from app.core.heightfield import (
    contact_patch_cells,
    distort_terrain,
    embed_terrain,
    generate_terrain,
    load_heightfield_text,
)
from app.schemas import DistortionSpec
from app.services import distortion_service


@pytest.mark.service
class TestDistortClipTerrain:
    def test_contact_onsets_preserved(self, clip_factory):
        clip = clip_factory(terrain=generate_terrain(3))
        spec = DistortionSpec(n_rectangles=30, inner_scale_range=(0.5, 0.6))

        distorted = distortion_service.distort_clip_terrain(clip, spec)
        embedded = embed_terrain(clip.terrain, spec.embed_rows, spec.embed_cols)

        assert distorted.heights.shape == (46, 46)
        for onset in contact_onsets(clip):
            rows, cols = contact_patch_cells(embedded, (onset.x, onset.y), spec.contact_patch_side)
            np.testing.assert_array_equal(distorted.heights[rows, cols], embedded.heights[rows, cols])

    def test_seed_offset_by_clip_seed(self, clip_factory):
        clip = clip_factory(terrain=generate_terrain(3), rng_seed=7)
        contacts = [(o.x, o.y) for o in contact_onsets(clip)]

        distorted = distortion_service.distort_clip_terrain(clip, DistortionSpec(rng_seed=2))
        expected = distort_terrain(clip.terrain, contacts, DistortionSpec(rng_seed=9))

        np.testing.assert_array_equal(distorted.heights, expected.heights)

    def test_clips_get_different_rectangles(self, clip_factory):
        clip = clip_factory(terrain=generate_terrain(3), rng_seed=7)
        other = replace(clip, rng_seed=8)
        spec = DistortionSpec(n_rectangles=20)

        first = distortion_service.distort_clip_terrain(clip, spec)
        second = distortion_service.distort_clip_terrain(other, spec)

        assert not np.array_equal(first.heights, second.heights)


@pytest.mark.service
class TestDistortDataset:
    def test_writes_one_file_per_clip(self, standing_dataset):
        paths = distortion_service.distort_dataset(standing_dataset, DistortionSpec())

        assert [p.parent.name for p in paths] == ["clip_000000", "clip_000001"]
        assert all(p.name == "terrain_distorted.txt" for p in paths)
        assert load_heightfield_text(paths[0]).heights.shape == (46, 46)

    def test_original_terrain_untouched(self, standing_dataset):
        before = (standing_dataset / "clip_000000" / "terrain.txt").read_text()

        distortion_service.distort_dataset(standing_dataset, DistortionSpec(rng_seed=5))

        assert (standing_dataset / "clip_000000" / "terrain.txt").read_text() == before

    def test_empty_dataset_raises(self, tmp_path):
        with pytest.raises(ValueError, match="No clips found"):
            distortion_service.distort_dataset(tmp_path, DistortionSpec())
