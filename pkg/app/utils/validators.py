"""
Validation utility functions for seeds and worker counts.
Pure functional approach for input validation.
"""

import os
from typing import Optional

from app.exceptions import ConfigError

WORKERS_ENV = "DATAGEN_WORKERS"
MAX_SEED = 2**32 - 1


def validate_seed_range(seed_base: int, n_clips: int) -> bool:
    """
    Validate a seed range base..base+n-1.

    Args:
        seed_base: First seed
        n_clips: Number of seeds

    Returns:
        bool: True if every seed is a valid generator seed

    Example:
        >>> validate_seed_range(0, 100)
        True
        >>> validate_seed_range(0, 0)
        False
    """
    if n_clips < 1 or seed_base < 0:
        return False
    return seed_base + n_clips - 1 <= MAX_SEED


def resolve_worker_count(flag: Optional[int] = None, environ: Optional[dict] = None) -> int:
    """
    Worker count from the command-line flag, else DATAGEN_WORKERS, else 1.

    Args:
        flag: Value given on the command line
        environ: Environment mapping (defaults to os.environ)

    Returns:
        int: Worker count >= 1

    Raises:
        ConfigError: If the chosen value is not a positive integer

    Example:
        >>> resolve_worker_count(None, {"DATAGEN_WORKERS": "4"})
        4
    """
    environ = os.environ if environ is None else environ
    if flag is not None:
        value, source = flag, "--workers"
    elif environ.get(WORKERS_ENV):
        source = WORKERS_ENV
        try:
            value = int(environ[WORKERS_ENV])
        except ValueError as e:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got '{environ[WORKERS_ENV]}'") from e
    else:
        return 1
    if value < 1:
        raise ConfigError(f"Worker count from {source} must be >= 1, got {value}")
    return value
