"""
Envgen service - Business logic for evaluation terrain generation.
Builds a track, audits its sampled parameters and writes the terrain files.
"""

import logging
import traceback
from pathlib import Path

from app.core.envgen import BUILDERS, Track, audit_track, export_boxes_text
from app.core.heightfield import export_heightfield_raw, save_heightfield_text
from app.schemas import EnvgenResponse
from app.utils.file_utils import ensure_directory_exists

logger = logging.getLogger(__name__)


def build_track(kind: str, seed: int) -> Track:
    """
    Build an evaluation track of a given kind.

    Raises:
        ValueError: If the kind is unknown
    """
    if kind not in BUILDERS:
        raise ValueError(f"Unknown track kind '{kind}'; expected one of {sorted(BUILDERS)}")
    return BUILDERS[kind](seed)


def generate_track_files(kind: str, seed: int, out_dir: Path, raw: bool = False) -> EnvgenResponse:
    """
    Build a track and write it to disk.

    Files: <kind>_<seed>.txt (height field text), <kind>_<seed>_boxes.txt when
    the track has boxes, <kind>_<seed>.json (layout with sampled parameters)
    and, with raw=True, <kind>_<seed>_raw.f32 with its JSON sidecar.

    Args:
        kind: stairs, procedural, wavy, mixed, slits or perlin
        seed: Track seed
        out_dir: Output directory
        raw: Also write the raw export

    Returns:
        EnvgenResponse: Paths and track dimensions

    Raises:
        ValueError: If the kind is unknown or the track fails its parameter audit
    """
    try:
        track = build_track(kind, seed)
        violations = audit_track(track.spec)
        if violations:
            raise ValueError(f"Track {kind} seed={seed} violates its parameter ranges: {violations[:3]}")

        out_dir = Path(out_dir)
        ensure_directory_exists(out_dir)
        stem = f"{kind}_{seed}"
        heightfield_path = save_heightfield_text(track.field, out_dir / f"{stem}.txt")
        (out_dir / f"{stem}.json").write_text(track.spec.model_dump_json(indent=2), encoding="utf-8")
        boxes_path = export_boxes_text(track.boxes, out_dir / f"{stem}_boxes.txt") if track.boxes else None
        if raw:
            export_heightfield_raw(track.field, out_dir / f"{stem}_raw.f32")

        logger.info(f"Wrote {kind} track seed={seed} to {heightfield_path}")
        return EnvgenResponse(
            kind=kind,
            seed=seed,
            heightfield_path=str(heightfield_path),
            boxes_path=str(boxes_path) if boxes_path else None,
            length=track.spec.total_length,
            width=track.spec.width,
        )
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Error generating {kind} track seed={seed}: {str(e)}\n{traceback.format_exc()}")
        raise
