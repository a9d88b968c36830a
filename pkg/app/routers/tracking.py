"""
Tracking router - API endpoints for imitation reward evaluation.
"""

from fastapi import APIRouter, HTTPException

from app.config import get_settings, load_tracking_config
from app.schemas import TrackingRewardRequest, TrackingRewardResponse
from app.services import tracking_service

router = APIRouter(prefix="/api/tracking", tags=["tracking"])


@router.post("/rewards", response_model=TrackingRewardResponse)
def evaluate_rewards(request: TrackingRewardRequest) -> TrackingRewardResponse:
    """
    Evaluate the five reward terms, the truncation error and termination for one state pair.

    - **sim**: Simulated state
    - **ref**: Reference state
    - **finetune**: Also return the straight-walking reward
    """
    try:
        config = load_tracking_config(get_settings().tracking_config_path)
        return tracking_service.evaluate_rewards(request, config)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))
