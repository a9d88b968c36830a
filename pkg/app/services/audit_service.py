"""
Audit service - Business logic for dataset consistency checks.
Recomputes planner residuals from stored solutions without calling the solver
and checks the invariants of every clip on disk.
"""

import logging
import traceback
from pathlib import Path
from typing import Optional

import numpy as np

from app.core.dataset import (
    SOLUTION_NAME,
    STORED_QUATERNION_NORM_TOL,
    TrajectoryClip,
    frame_count,
    list_clip_dirs,
    load_clip,
)
from app.core.planner import audit_solution, load_solution
from app.core.robot_model import RobotModel, robot_model_hash
from app.exceptions import ClipFormatError
from app.schemas import AuditResponse, PlannerConfig
from app.services.generation_service import load_summary

logger = logging.getLogger(__name__)


def check_clip(clip: TrajectoryClip, model: Optional[RobotModel] = None) -> list[str]:
    """
    Structural invariants of a loaded clip.

    Checks the frame count against the horizon, quaternion norms, the number
    of contact flag changes per leg against the stored phase schedule and,
    when a model is given, the robot hash.

    Returns:
        list[str]: Violations; empty when the clip is consistent
    """
    failures = []
    expected = frame_count(clip.horizon, clip.rate_hz)
    if clip.n_frames != expected:
        failures.append(f"{clip.n_frames} frames, expected {expected}")

    norms = np.linalg.norm(clip.base_quat.astype(np.float64), axis=1)
    norm_error = float(np.abs(norms - 1.0).max(initial=0.0))
    if norm_error > STORED_QUATERNION_NORM_TOL:
        failures.append(f"quaternion norm error {norm_error:.2e}")

    flags = clip.contact_flags > 0.5
    for leg, durations in enumerate(clip.phase_durations):
        changes = int(np.count_nonzero(flags[1:, leg] != flags[:-1, leg]))
        if changes != len(durations) - 1:
            failures.append(f"leg {leg}: {changes} contact changes, schedule has {len(durations)} phases")

    if model is not None and clip.robot_hash != robot_model_hash(model):
        failures.append("robot hash differs from the current robot description")
    return failures


def audit_dataset(
    dataset_dir: Path,
    model: RobotModel,
    planner_config: Optional[PlannerConfig] = None,
    tolerance: float = 1e-3,
) -> AuditResponse:
    """
    Audit every clip of a dataset.

    The planner configuration is taken from summary.json when present, else
    from the argument (defaults otherwise).

    Args:
        dataset_dir: Dataset directory
        model: Robot description the dataset was generated with
        planner_config: Fallback planner configuration
        tolerance: Largest accepted residual

    Returns:
        AuditResponse: Failures per clip; passed is False on any failure

    Raises:
        ValueError: If the directory holds no clips
    """
    try:
        dataset_dir = Path(dataset_dir)
        clip_dirs = list_clip_dirs(dataset_dir) if dataset_dir.is_dir() else []
        if not clip_dirs:
            raise ValueError(f"No clips found in {dataset_dir}")

        summary = load_summary(dataset_dir)
        config = summary.planner_config if summary else (planner_config or PlannerConfig())
        logger.info(f"Auditing {len(clip_dirs)} clips in {dataset_dir}")

        failures: list[str] = []
        failed_clips = 0
        for clip_dir in clip_dirs:
            clip_failures = []
            try:
                clip = load_clip(clip_dir)
            except ClipFormatError as e:
                clip_failures.append(f"unreadable ({e.channel}): {str(e)}")
            else:
                clip_failures += check_clip(clip, model)
                solution_path = clip_dir / SOLUTION_NAME
                if solution_path.exists():
                    report = audit_solution(load_solution(solution_path), clip.terrain, model, config, tolerance)
                    clip_failures += report.failures
                else:
                    clip_failures.append("solution.json missing")

            if clip_failures:
                failed_clips += 1
                failures += [f"{clip_dir.name}: {message}" for message in clip_failures]
                logger.warning(f"Clip {clip_dir.name} failed audit: {'; '.join(clip_failures)}")

        logger.info(f"Audit of {dataset_dir}: {failed_clips}/{len(clip_dirs)} clips failed")
        return AuditResponse(
            dataset_dir=str(dataset_dir),
            n_clips=len(clip_dirs),
            n_failed=failed_clips,
            failures=failures,
            passed=failed_clips == 0,
        )
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Error auditing dataset {dataset_dir}: {str(e)}\n{traceback.format_exc()}")
        raise
