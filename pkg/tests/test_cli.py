"""
Tests for the command-line entry point.
Every subcommand is run in-process through main(); exit codes are asserted.
"""

import json

import pytest

from app import cli
from app.core.dataset import list_clip_dirs, save_clip


@pytest.fixture
def standing_config_file(tmp_path, standing_planner_config):
    path = tmp_path / "standing.json"
    path.write_text(standing_planner_config.model_dump_json())
    return path


# ============================================================================
# Generation Commands
# ============================================================================

@pytest.mark.integration
class TestGenerate:
    def test_generate_flat(self, tmp_path, standing_config_file, capsys):
        out = tmp_path / "dataset"

        code = cli.main([
            "generate", "--n-clips", "2", "--out", str(out), "--flat", "--no-catalog",
            "--planner-config", str(standing_config_file),
        ])

        assert code == 0
        assert len(list_clip_dirs(out)) == 2
        assert "2/2 clips converged" in capsys.readouterr().out

    def test_zero_clips(self, tmp_path, standing_config_file):
        code = cli.main([
            "generate", "--n-clips", "0", "--out", str(tmp_path / "d"), "--no-catalog",
            "--planner-config", str(standing_config_file),
        ])

        assert code == 1

    def test_zero_workers(self, tmp_path, standing_config_file):
        code = cli.main([
            "generate", "--n-clips", "1", "--out", str(tmp_path / "d"), "--workers", "0", "--no-catalog",
            "--planner-config", str(standing_config_file),
        ])

        assert code == 1

    def test_missing_planner_config(self, tmp_path):
        code = cli.main([
            "generate", "--n-clips", "1", "--out", str(tmp_path / "d"), "--no-catalog",
            "--planner-config", str(tmp_path / "missing.json"),
        ])

        assert code == 1

    def test_missing_required_argument(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["generate", "--out", "somewhere"])

        assert exc.value.code == 2


# ============================================================================
# Dataset Commands
# ============================================================================

@pytest.mark.integration
class TestDatasetCommands:
    def test_audit_passes(self, standing_dataset, capsys):
        assert cli.main(["audit", str(standing_dataset)]) == 0
        assert "2/2 clips passed" in capsys.readouterr().out

    def test_audit_fails(self, standing_dataset, capsys):
        (standing_dataset / "clip_000000" / "solution.json").unlink()

        assert cli.main(["audit", str(standing_dataset)]) == 1
        assert "FAIL clip_000000: solution.json missing" in capsys.readouterr().out

    def test_audit_empty_directory(self, tmp_path):
        assert cli.main(["audit", str(tmp_path)]) == 1

    def test_stats(self, standing_dataset, tmp_path, capsys):
        code = cli.main(["stats", str(standing_dataset), "--out", str(tmp_path / "stats")])

        assert code == 0
        assert json.loads(capsys.readouterr().out)["n_contacts"] == 8
        assert (tmp_path / "stats" / "velocity.tsv").exists()

    def test_distort(self, standing_dataset):
        assert cli.main(["distort", str(standing_dataset), "--seed", "4"]) == 0
        assert (standing_dataset / "clip_000000" / "terrain_distorted.txt").exists()

    def test_track(self, tmp_path, clip_factory, capsys):
        save_clip(clip_factory(), tmp_path / "ref")

        code = cli.main([
            "track", str(tmp_path / "ref"), str(tmp_path / "ref"), "--finetune", "--out", str(tmp_path / "r.tsv"),
        ])

        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["frames"] == 201
        assert summary["mean_reward"] == pytest.approx(1.0)
        assert summary["first_termination"] is None
        assert (tmp_path / "r.tsv").exists()


# ============================================================================
# Terrain and Solver Commands
# ============================================================================

class TestEnvgen:
    def test_envgen_stairs(self, tmp_path):
        assert cli.main(["envgen", "stairs", "--seed", "2", "--out", str(tmp_path), "--raw"]) == 0
        assert (tmp_path / "stairs_2.txt").exists()
        assert (tmp_path / "stairs_2_boxes.txt").exists()
        assert (tmp_path / "stairs_2_raw.f32").exists()

    def test_envgen_unknown_kind(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli.main(["envgen", "lava", "--out", str(tmp_path)])

        assert exc.value.code == 2


class TestCheckJacobians:
    def test_benchmarks_pass(self, capsys):
        assert cli.main(["check-jacobians", "--benchmark"]) == 0
        assert "benchmark circle" in capsys.readouterr().out

    def test_injected_fault_fails(self, capsys):
        assert cli.main(["check-jacobians", "--benchmark", "--inject-fault", "box"]) == 1
        assert "FLAGGED" in capsys.readouterr().out

    def test_unknown_fault_block(self):
        assert cli.main(["check-jacobians", "--benchmark", "--inject-fault", "nowhere"]) == 1
