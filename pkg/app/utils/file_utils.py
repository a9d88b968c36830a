"""
File utility functions for dataset directories and payload files.
Pure functional approach for file management.
"""

import hashlib
import uuid
from pathlib import Path
from typing import Iterable


# Files whose bytes make up a clip payload; manifests carry timings and are excluded.
PAYLOAD_SUFFIXES = (".f32", ".txt")


def ensure_directory_exists(directory: Path) -> None:
    """
    Ensure directory exists, create if it doesn't.

    Args:
        directory: Path to directory

    Example:
        >>> ensure_directory_exists(Path("storage/datasets/flat"))
    """
    directory.mkdir(parents=True, exist_ok=True)


def sanitize_filename(filename: str) -> str:
    """
    Sanitize filename by removing unsafe characters.

    Args:
        filename: Original filename

    Returns:
        str: Sanitized filename

    Example:
        >>> sanitize_filename("my run/seed?0")
        "my run_seed_0"
    """
    unsafe_chars = '<>:"/\\|?*'
    sanitized = filename
    for char in unsafe_chars:
        sanitized = sanitized.replace(char, "_")

    while "__" in sanitized:
        sanitized = sanitized.replace("__", "_")

    return sanitized.strip("_")


def clip_dir_name(seed: int) -> str:
    """
    Directory name of the clip planned with a given seed.

    Example:
        >>> clip_dir_name(12)
        "clip_000012"
    """
    return f"clip_{seed:06d}"


def generate_dataset_name(seed_base: int, n_clips: int) -> str:
    """
    Unique dataset name for runs that were not given one.

    Example:
        >>> generate_dataset_name(0, 100)
        "seeds-0-99-a1b2c3d4"
    """
    return f"seeds-{seed_base}-{seed_base + n_clips - 1}-{uuid.uuid4().hex[:8]}"


def payload_files(directory: Path, suffixes: Iterable[str] = PAYLOAD_SUFFIXES) -> list[Path]:
    """Payload files below a directory, sorted by relative path."""
    directory = Path(directory)
    suffixes = tuple(suffixes)
    return sorted(p for p in directory.rglob("*") if p.is_file() and p.suffix in suffixes)


def directory_digest(directory: Path, suffixes: Iterable[str] = PAYLOAD_SUFFIXES) -> str:
    """
    SHA-256 over the relative paths and bytes of all payload files.

    Two dataset directories with equal digests hold identical clips.

    Args:
        directory: Dataset or clip directory
        suffixes: File suffixes counted as payload

    Returns:
        str: Hex digest
    """
    directory = Path(directory)
    digest = hashlib.sha256()
    for path in payload_files(directory, suffixes):
        digest.update(path.relative_to(directory).as_posix().encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()
