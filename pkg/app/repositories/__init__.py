"""
Repository layer - Data access functions for all models.
Import repositories here for easy access.
"""

from app.repositories import (
    dataset_repository,
    clip_repository
)

__all__ = [
    "dataset_repository",
    "clip_repository"
]
