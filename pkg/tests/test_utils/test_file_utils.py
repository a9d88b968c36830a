"""
Test suite for file utilities.
"""

import re

import pytest

from app.utils.file_utils import (
    clip_dir_name,
    directory_digest,
    ensure_directory_exists,
    generate_dataset_name,
    payload_files,
    sanitize_filename,
)


@pytest.mark.unit
class TestNames:
    def test_clip_dir_name(self):
        assert clip_dir_name(12) == "clip_000012"
        assert clip_dir_name(1234567) == "clip_1234567"

    def test_generate_dataset_name(self):
        name = generate_dataset_name(10, 5)

        assert re.fullmatch(r"seeds-10-14-[0-9a-f]{8}", name)
        assert name != generate_dataset_name(10, 5)

    @pytest.mark.parametrize("raw, expected", [
        ("flat", "flat"),
        ("my run/seed?0", "my run_seed_0"),
        ("a<>b", "a_b"),
        ("/leading", "leading"),
    ])
    def test_sanitize_filename(self, raw, expected):
        assert sanitize_filename(raw) == expected


@pytest.mark.unit
class TestDigest:
    def test_payload_files_sorted_and_filtered(self, tmp_path):
        (tmp_path / "b").mkdir()
        (tmp_path / "b" / "q.f32").write_bytes(b"\x00" * 4)
        (tmp_path / "a.txt").write_text("1 1")
        (tmp_path / "summary.json").write_text("{}")

        files = payload_files(tmp_path)

        assert [p.relative_to(tmp_path).as_posix() for p in files] == ["a.txt", "b/q.f32"]

    def test_digest_ignores_manifests(self, tmp_path):
        (tmp_path / "q.f32").write_bytes(b"\x01\x02\x03\x04")
        before = directory_digest(tmp_path)

        (tmp_path / "manifest.json").write_text('{"wall_time_s": 1.2}')

        assert directory_digest(tmp_path) == before

    def test_digest_sees_payload_changes(self, tmp_path):
        (tmp_path / "q.f32").write_bytes(b"\x01\x02\x03\x04")
        before = directory_digest(tmp_path)

        (tmp_path / "q.f32").write_bytes(b"\x01\x02\x03\x05")

        assert directory_digest(tmp_path) != before

    def test_digest_sees_renames(self, tmp_path):
        (tmp_path / "q.f32").write_bytes(b"\x01\x02\x03\x04")
        before = directory_digest(tmp_path)

        (tmp_path / "q.f32").rename(tmp_path / "qdot.f32")

        assert directory_digest(tmp_path) != before

    def test_ensure_directory_exists(self, tmp_path):
        target = tmp_path / "a" / "b"

        ensure_directory_exists(target)
        ensure_directory_exists(target)

        assert target.is_dir()
