"""
Router layer - FastAPI route handlers.
Import routers here for easy access.
"""

from app.routers import datasets, terrains, tracking

__all__ = ["datasets", "terrains", "tracking"]
