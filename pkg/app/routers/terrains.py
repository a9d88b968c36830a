"""
Terrains router - API endpoints for evaluation terrain generation.
"""

from fastapi import APIRouter, HTTPException

from app.config import get_settings
from app.schemas import EnvgenRequest, EnvgenResponse
from app.services import envgen_service

router = APIRouter(prefix="/api/terrains", tags=["terrains"])


@router.post("", response_model=EnvgenResponse, status_code=201)
def generate_terrain(request: EnvgenRequest) -> EnvgenResponse:
    """
    Build an evaluation track and store it below the terrains directory.

    - **kind**: stairs, procedural, wavy, mixed, slits or perlin
    - **seed**: Track seed
    """
    try:
        return envgen_service.generate_track_files(request.kind, request.seed, get_settings().terrains_dir)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Terrain generation failed: {str(e)}")
