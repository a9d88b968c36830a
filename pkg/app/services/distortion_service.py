"""
Distortion service - Business logic for contact-preserving terrain augmentation.
Each clip's terrain is distorted around that clip's own contact onsets.
"""

import logging
import traceback
from pathlib import Path

from app.core.dataset import TrajectoryClip, contact_onsets, list_clip_dirs, load_clip
from app.core.heightfield import HeightField, distort_terrain, save_heightfield_text
from app.schemas import DistortionSpec

logger = logging.getLogger(__name__)

DISTORTED_NAME = "terrain_distorted.txt"


def distort_clip_terrain(clip: TrajectoryClip, spec: DistortionSpec) -> HeightField:
    """
    Distort a clip's terrain keeping the patches under its contact onsets.

    The rectangle seed is spec.rng_seed offset by the clip's planning seed,
    so every clip of a dataset gets its own rectangles.

    Args:
        clip: Clip whose terrain and contacts are used
        spec: Distortion parameters

    Returns:
        HeightField: Distorted embedded terrain
    """
    contacts = [(onset.x, onset.y) for onset in contact_onsets(clip)]
    clip_spec = spec.model_copy(update={"rng_seed": spec.rng_seed + (clip.rng_seed or 0)})
    return distort_terrain(clip.terrain, contacts, clip_spec)


def distort_clip_dir(clip_dir: Path, spec: DistortionSpec) -> Path:
    """
    Write the distorted terrain of one clip next to its payload.

    Returns:
        Path: Path of terrain_distorted.txt
    """
    clip = load_clip(clip_dir)
    field = distort_clip_terrain(clip, spec)
    path = save_heightfield_text(field, Path(clip_dir) / DISTORTED_NAME)
    logger.debug(f"Distorted terrain of {clip_dir} with {len(contact_onsets(clip))} preserved contacts")
    return path


def distort_dataset(dataset_dir: Path, spec: DistortionSpec) -> list[Path]:
    """
    Distort the terrain of every clip in a dataset.

    Args:
        dataset_dir: Dataset directory
        spec: Distortion parameters

    Returns:
        list[Path]: Written terrain files in clip order

    Raises:
        ValueError: If the directory holds no clips
        ClipFormatError: If a clip cannot be read
    """
    try:
        clip_dirs = list_clip_dirs(dataset_dir)
        if not clip_dirs:
            raise ValueError(f"No clips found in {dataset_dir}")

        logger.info(f"Distorting {len(clip_dirs)} clip terrains in {dataset_dir}")
        paths = [distort_clip_dir(clip_dir, spec) for clip_dir in clip_dirs]
        logger.info(f"Distortion complete for {dataset_dir}")
        return paths
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Error distorting dataset {dataset_dir}: {str(e)}\n{traceback.format_exc()}")
        raise
