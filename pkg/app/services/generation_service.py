"""
Generation service - Business logic for dataset generation.
Runs terrain generation, planning and clip sampling per seed and collects the results.
"""

import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from pydantic import BaseModel
from sqlalchemy.orm import Session

from app.core.dataset import SOLUTION_NAME, TrajectoryClip, sample_clip, save_clip
from app.core.heightfield import HeightField, flat_terrain, generate_terrain
from app.core.planner import CentroidalSolution, plan, save_solution
from app.core.robot_model import RobotModel, robot_model_hash
from app.exceptions import ConfigError
from app.repositories import clip_repository, dataset_repository
from app.schemas import ClipRecordCreate, DatasetCreate, DistortionSpec, PipelineConfig, PlannerConfig
from app.services import distortion_service
from app.utils.file_utils import clip_dir_name, ensure_directory_exists, generate_dataset_name
from app.utils.validators import validate_seed_range

logger = logging.getLogger(__name__)

SUMMARY_NAME = "summary.json"


# ============================================================================
# Data Types
# ============================================================================

@dataclass(frozen=True)
class SeedJob:
    """Everything a worker needs to plan one seed."""
    seed: int
    planner_config: PlannerConfig
    model: RobotModel
    flat: bool = False


@dataclass
class SeedOutcome:
    """Result of one seed as handed back to the collector."""
    seed: int
    status: str  # converged, failed, rejected
    message: Optional[str] = None
    max_violation: Optional[float] = None
    iterations: Optional[int] = None
    wall_time_s: Optional[float] = None
    solution: Optional[CentroidalSolution] = None
    clip: Optional[TrajectoryClip] = None


class ClipSummary(BaseModel):
    seed: int
    status: str
    max_violation: Optional[float] = None
    iterations: Optional[int] = None
    clip_dir: Optional[str] = None
    message: Optional[str] = None


class DatasetSummary(BaseModel):
    """Contents of summary.json in a dataset directory."""
    name: str
    n_requested: int
    n_attempted: int
    n_converged: int
    convergence_rate: float
    seed_base: int
    flat_terrain: bool
    distortion: bool
    robot_hash: str
    planner_config: PlannerConfig
    clips: list[ClipSummary]


# ============================================================================
# Worker Operations
# ============================================================================

def seed_terrain(seed: int, flat: bool = False) -> HeightField:
    """Planning terrain of a seed: procedural by default, flat for desk runs."""
    return flat_terrain() if flat else generate_terrain(seed)


def run_seed(job: SeedJob) -> SeedOutcome:
    """
    Plan one seed and sample its clip.

    Runs inside a worker process. Domain errors become failed or rejected
    outcomes; nothing is written to disk here.

    Args:
        job: Seed, planner configuration and robot model

    Returns:
        SeedOutcome: Status, solve statistics and the clip when converged
    """
    try:
        terrain = seed_terrain(job.seed, job.flat)
        try:
            solution = plan(terrain, job.model, job.planner_config, rng_seed=job.seed, terrain_seed=job.seed)
        except ValueError as e:
            logger.warning(f"Seed {job.seed}: problem could not be solved: {str(e)}")
            return SeedOutcome(seed=job.seed, status="failed", message=str(e))

        report = solution.report
        outcome = SeedOutcome(
            seed=job.seed,
            status="failed",
            max_violation=report.max_violation,
            iterations=report.iterations,
            wall_time_s=report.wall_time_s,
            solution=solution,
        )
        if not solution.converged:
            outcome.message = f"solver stopped with status {report.status}"
            logger.warning(f"Seed {job.seed}: not converged ({report.status}, violation {report.max_violation:.2e})")
            return outcome

        try:
            outcome.clip = sample_clip(solution, terrain, job.model)
            outcome.status = "converged"
        except ValueError as e:
            outcome.status = "rejected"
            outcome.message = str(e)
            logger.warning(f"Seed {job.seed}: clip rejected: {str(e)}")
        return outcome
    except Exception as e:
        logger.error(f"Error planning seed {job.seed}: {str(e)}\n{traceback.format_exc()}")
        raise


def iter_outcomes(jobs: list[SeedJob], workers: int) -> Iterator[SeedOutcome]:
    """Outcomes in job order; a pool is only started for more than one worker."""
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield run_seed(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(run_seed, jobs)


# ============================================================================
# Collector Operations
# ============================================================================

def write_clip(outcome: SeedOutcome, dataset_dir: Path, distortion: Optional[DistortionSpec] = None) -> Path:
    """
    Store a converged outcome: clip payload, solution and optional distorted terrain.

    Returns:
        Path: The clip directory
    """
    clip_dir = dataset_dir / clip_dir_name(outcome.seed)
    save_clip(outcome.clip, clip_dir)
    save_solution(outcome.solution, clip_dir / SOLUTION_NAME)
    if distortion is not None:
        distortion_service.distort_clip_dir(clip_dir, distortion)
    return clip_dir


def write_summary(summary: DatasetSummary, dataset_dir: Path) -> Path:
    path = dataset_dir / SUMMARY_NAME
    path.write_text(summary.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_summary(dataset_dir: Path) -> Optional[DatasetSummary]:
    """Read summary.json, or None when the directory has none."""
    path = Path(dataset_dir) / SUMMARY_NAME
    if not path.exists():
        return None
    return DatasetSummary.model_validate(json.loads(path.read_text(encoding="utf-8")))


# ============================================================================
# Pipeline
# ============================================================================

def generate_dataset(
    config: PipelineConfig,
    planner_config: PlannerConfig,
    model: RobotModel,
    db: Optional[Session] = None,
) -> DatasetSummary:
    """
    Generate a dataset directory for seeds base..base+n-1.

    Failed and rejected seeds are skipped. With config.retries > 0 further
    seeds after the range are tried, at most retries of them, until n clips
    converged. Only this process writes files and catalog rows.

    Args:
        config: Pipeline settings (output directory, seeds, workers, flags)
        planner_config: Planner configuration for every seed
        model: Robot description
        db: Catalog session; no catalog rows are written when None

    Returns:
        DatasetSummary: The summary also written to summary.json

    Raises:
        ConfigError: If the seed range is invalid

    Example:
        >>> config = PipelineConfig(n_clips=3, output_dir=Path("storage/datasets/flat"), flat_terrain=True)
        >>> summary = generate_dataset(config, PlannerConfig(horizon=2.0, goal_displacement=0.5), model)
        >>> summary.convergence_rate
        1.0
    """
    dataset = None
    try:
        if not validate_seed_range(config.seed_base, config.n_clips + config.retries):
            raise ConfigError(f"Invalid seed range: base={config.seed_base} n={config.n_clips} retries={config.retries}")

        dataset_dir = Path(config.output_dir)
        ensure_directory_exists(dataset_dir)
        name = config.name or generate_dataset_name(config.seed_base, config.n_clips)
        distortion = DistortionSpec() if config.distortion else None
        logger.info(
            f"Generating dataset '{name}' in {dataset_dir}: seeds {config.seed_base}.."
            f"{config.seed_base + config.n_clips - 1}, workers={config.workers}"
        )

        if db is not None:
            dataset = dataset_repository.create_dataset(db, DatasetCreate(
                name=name,
                directory=str(dataset_dir.resolve()),
                n_requested=config.n_clips,
                seed_base=config.seed_base,
                distortion=config.distortion,
            ))

        def jobs_for(seeds: range) -> list[SeedJob]:
            return [SeedJob(seed=s, planner_config=planner_config, model=model, flat=config.flat_terrain) for s in seeds]

        summaries: list[ClipSummary] = []
        records: list[ClipRecordCreate] = []
        n_converged = 0
        next_seed = config.seed_base + config.n_clips
        retry_limit = next_seed + config.retries
        pending = jobs_for(range(config.seed_base, next_seed))
        while pending:
            for outcome in iter_outcomes(pending, config.workers):
                clip_dir = None
                if outcome.status == "converged":
                    clip_dir = write_clip(outcome, dataset_dir, distortion)
                    n_converged += 1
                summaries.append(ClipSummary(
                    seed=outcome.seed,
                    status=outcome.status,
                    max_violation=outcome.max_violation,
                    iterations=outcome.iterations,
                    clip_dir=clip_dir.name if clip_dir else None,
                    message=outcome.message,
                ))
                if dataset is not None:
                    records.append(ClipRecordCreate(
                        dataset_id=dataset.id,
                        seed=outcome.seed,
                        status=outcome.status,
                        max_violation=outcome.max_violation,
                        iterations=outcome.iterations,
                        wall_time_s=outcome.wall_time_s,
                        clip_path=str(clip_dir) if clip_dir else None,
                        message=outcome.message,
                    ))
            missing = min(config.n_clips - n_converged, retry_limit - next_seed)
            pending = jobs_for(range(next_seed, next_seed + missing)) if missing > 0 else []
            if pending:
                logger.info(f"{len(pending)} clips missing; retrying with seeds {next_seed}..{next_seed + missing - 1}")
            next_seed += max(missing, 0)

        summary = DatasetSummary(
            name=name,
            n_requested=config.n_clips,
            n_attempted=len(summaries),
            n_converged=n_converged,
            convergence_rate=n_converged / len(summaries),
            seed_base=config.seed_base,
            flat_terrain=config.flat_terrain,
            distortion=config.distortion,
            robot_hash=robot_model_hash(model),
            planner_config=planner_config,
            clips=summaries,
        )
        write_summary(summary, dataset_dir)

        if dataset is not None:
            clip_repository.create_clip_records(db, records)
            dataset_repository.update_dataset(db, dataset.id, {
                "convergence_rate": summary.convergence_rate,
                "status": "completed",
            })

        logger.info(
            f"Dataset '{name}' done: {n_converged}/{summary.n_attempted} converged "
            f"(rate {summary.convergence_rate:.2f})"
        )
        return summary
    except ValueError:
        _mark_failed(db, dataset)
        raise
    except Exception as e:
        logger.error(f"Error generating dataset in {config.output_dir}: {str(e)}\n{traceback.format_exc()}")
        _mark_failed(db, dataset)
        raise


def _mark_failed(db: Optional[Session], dataset) -> None:
    if db is not None and dataset is not None:
        dataset_repository.update_dataset(db, dataset.id, {"status": "failed"})
