"""
Service layer - Business logic for all operations.
Import services here for easy access.
"""

from app.services import (
    distortion_service,
    generation_service,
    audit_service,
    stats_service,
    envgen_service,
    tracking_service,
    solver_service,
    catalog_service
)

__all__ = [
    "distortion_service",
    "generation_service",
    "audit_service",
    "stats_service",
    "envgen_service",
    "tracking_service",
    "solver_service",
    "catalog_service"
]
