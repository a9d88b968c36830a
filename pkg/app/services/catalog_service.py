"""
Catalog service - Business logic for dataset catalog lookups.
Resolves catalog rows to dataset directories for the HTTP surface.
"""

import logging
import traceback
from pathlib import Path
from typing import Any, Dict, Optional

from sqlalchemy.orm import Session

from app.config import get_settings, load_planner_config, load_robot
from app.models import ClipRecord, Dataset
from app.repositories import clip_repository, dataset_repository
from app.schemas import DatasetGenerateRequest, PipelineConfig, PlannerConfig
from app.services import generation_service
from app.utils.file_utils import generate_dataset_name, sanitize_filename

logger = logging.getLogger(__name__)


def get_dataset(db: Session, dataset_id: int) -> Dataset:
    """
    Get a dataset row by ID.

    Raises:
        ValueError: If the dataset does not exist
    """
    dataset = dataset_repository.get_dataset_by_id(db, dataset_id)
    if not dataset:
        raise ValueError(f"Dataset with id {dataset_id} not found")
    return dataset


def get_dataset_list(db: Session, status: Optional[str] = None, limit: int = 10, offset: int = 0) -> Dict[str, Any]:
    """
    Get paginated dataset list.

    Returns:
        Dict: {"total": int, "items": List[Dataset]}
    """
    try:
        items = dataset_repository.get_datasets_paginated(db, skip=offset, limit=limit, status=status)
        total = dataset_repository.count_datasets(db, status=status)
        return {"total": total, "items": items}
    except Exception as e:
        logger.error(f"Error listing datasets: {str(e)}\n{traceback.format_exc()}")
        raise


def get_dataset_clips(db: Session, dataset_id: int, status: Optional[str] = None) -> list[ClipRecord]:
    """Clip records of an existing dataset."""
    get_dataset(db, dataset_id)
    return clip_repository.get_clip_records_by_dataset(db, dataset_id, status=status)


def get_dataset_dir(db: Session, dataset_id: int) -> Path:
    """Directory of an existing dataset."""
    return Path(get_dataset(db, dataset_id).directory)


def planner_config_for(request: DatasetGenerateRequest) -> PlannerConfig:
    """Planner configuration from the settings file with the request's overrides applied."""
    config = load_planner_config(get_settings().planner_config_path)
    updates = {}
    if request.horizon is not None:
        updates["horizon"] = request.horizon
    if request.goal_displacement is not None:
        updates["goal_displacement"] = request.goal_displacement
    if request.time_budget_s is not None:
        updates["solve"] = config.solve.model_copy(update={"time_budget_s": request.time_budget_s})
    # Validate the merged config as a whole.
    return PlannerConfig.model_validate({**config.model_dump(), **updates})


def generate_from_request(db: Session, request: DatasetGenerateRequest) -> Dataset:
    """
    Generate a dataset below settings.datasets_dir and return its catalog row.

    Raises:
        ValueError: If the name is taken or the configuration is invalid
    """
    try:
        settings = get_settings()
        name = sanitize_filename(request.name) if request.name else generate_dataset_name(request.seed_base, request.n_clips)
        if dataset_repository.get_dataset_by_name(db, name):
            raise ValueError(f"Dataset '{name}' already exists")

        pipeline = PipelineConfig(
            n_clips=request.n_clips,
            output_dir=settings.datasets_dir / name,
            workers=request.workers,
            seed_base=request.seed_base,
            distortion=request.distortion,
            retries=request.retries,
            flat_terrain=request.flat_terrain,
            name=name,
        )
        generation_service.generate_dataset(pipeline, planner_config_for(request), load_robot(), db)
        return dataset_repository.get_dataset_by_name(db, name)
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Error generating dataset from request: {str(e)}\n{traceback.format_exc()}")
        raise
