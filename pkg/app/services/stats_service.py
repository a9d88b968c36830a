"""
Stats service - Business logic for dataset statistics tables.
"""

import logging
import traceback
from pathlib import Path
from typing import Optional

from app.core.dataset import STATS_X_LIMIT, dataset_stats, list_clip_dirs, load_clip, write_stats_tables
from app.schemas import StatsResponse

logger = logging.getLogger(__name__)


def compute_stats(dataset_dir: Path, out_dir: Optional[Path] = None, x_limit: float = STATS_X_LIMIT) -> StatsResponse:
    """
    Contact distribution and velocity tables of a dataset.

    Args:
        dataset_dir: Dataset directory
        out_dir: Where to write contacts.tsv and velocity.tsv (default <dataset>/stats)
        x_limit: Contact onsets beyond this forward position are dropped

    Returns:
        StatsResponse: Row counts and table paths

    Raises:
        ValueError: If the dataset holds no clips
    """
    try:
        dataset_dir = Path(dataset_dir)
        clip_dirs = list_clip_dirs(dataset_dir) if dataset_dir.is_dir() else []
        if not clip_dirs:
            raise ValueError(f"No clips found in {dataset_dir}")

        clips = [load_clip(d) for d in clip_dirs]
        stats = dataset_stats(clips, x_limit)
        contacts_path, velocity_path = write_stats_tables(stats, out_dir or dataset_dir / "stats")
        logger.info(f"Stats for {dataset_dir}: {len(clips)} clips, {len(stats.contacts)} contact onsets")

        return StatsResponse(
            n_clips=len(clips),
            n_contacts=len(stats.contacts),
            n_velocity_rows=len(stats.velocity),
            contacts_path=str(contacts_path),
            velocity_path=str(velocity_path),
        )
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Error computing stats for {dataset_dir}: {str(e)}\n{traceback.format_exc()}")
        raise
