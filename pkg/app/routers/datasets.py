"""
Datasets router - API endpoints for dataset operations.
Handles generation, listing, auditing, statistics and distortion.
"""

from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy.orm import Session
from typing import Optional, Dict, Any, List

from app.config import load_robot
from app.database import get_db
from app.schemas import (
    AuditResponse,
    ClipRecordResponse,
    DatasetGenerateRequest,
    DatasetResponse,
    DistortionSpec,
    DistortRequest,
    StatsResponse,
)
from app.services import audit_service, catalog_service, distortion_service, stats_service

router = APIRouter(prefix="/api/datasets", tags=["datasets"])


def _is_missing(error: ValueError) -> bool:
    return "not found" in str(error)


@router.post("", response_model=DatasetResponse, status_code=201)
def generate_dataset(
    request: DatasetGenerateRequest,
    db: Session = Depends(get_db)
) -> DatasetResponse:
    """
    Generate a dataset (blocks until every seed is planned).

    - **n_clips**: Number of seeds to plan
    - **seed_base**: First seed
    - **flat_terrain**: Plan on flat ground instead of procedural terrain
    """
    try:
        dataset = catalog_service.generate_from_request(db, request)
        return DatasetResponse.model_validate(dataset)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Generation failed: {str(e)}")


@router.get("", response_model=Dict[str, Any])
def list_datasets(
    status: Optional[str] = None,
    limit: int = 10,
    offset: int = 0,
    db: Session = Depends(get_db)
) -> Dict[str, Any]:
    """
    List datasets with pagination and optional status filter.

    - **status**: Optional status filter (running, completed, failed)
    - **limit**: Maximum number of results (default: 10)
    - **offset**: Number of results to skip (default: 0)
    """
    try:
        result = catalog_service.get_dataset_list(db, status=status, limit=limit, offset=offset)
        items = [DatasetResponse.model_validate(dataset) for dataset in result["items"]]
        return {
            "total": result["total"],
            "items": items,
            "limit": limit,
            "offset": offset
        }
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/{dataset_id}", response_model=DatasetResponse)
def get_dataset(dataset_id: int, db: Session = Depends(get_db)) -> DatasetResponse:
    """Get dataset by ID."""
    try:
        return DatasetResponse.model_validate(catalog_service.get_dataset(db, dataset_id))
    except ValueError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/{dataset_id}/clips", response_model=List[ClipRecordResponse])
def list_dataset_clips(
    dataset_id: int,
    status: Optional[str] = None,
    db: Session = Depends(get_db)
) -> List[ClipRecordResponse]:
    """
    List the per-seed outcomes of a dataset.

    - **status**: Optional status filter (converged, failed, rejected)
    """
    try:
        records = catalog_service.get_dataset_clips(db, dataset_id, status=status)
        return [ClipRecordResponse.model_validate(record) for record in records]
    except ValueError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/{dataset_id}/audit", response_model=AuditResponse)
def audit_dataset(dataset_id: int, db: Session = Depends(get_db)) -> AuditResponse:
    """Recompute residuals and clip invariants of every clip in the dataset."""
    try:
        directory = catalog_service.get_dataset_dir(db, dataset_id)
        return audit_service.audit_dataset(directory, load_robot())
    except ValueError as e:
        raise HTTPException(status_code=404 if _is_missing(e) else 400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Audit failed: {str(e)}")


@router.get("/{dataset_id}/stats", response_model=StatsResponse)
def dataset_stats(dataset_id: int, db: Session = Depends(get_db)) -> StatsResponse:
    """Write and summarize the contact distribution and velocity tables."""
    try:
        directory = catalog_service.get_dataset_dir(db, dataset_id)
        return stats_service.compute_stats(directory)
    except ValueError as e:
        raise HTTPException(status_code=404 if _is_missing(e) else 400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/{dataset_id}/distort", response_model=Dict[str, Any])
def distort_dataset(
    dataset_id: int,
    request: DistortRequest,
    db: Session = Depends(get_db)
) -> Dict[str, Any]:
    """
    Write a contact-preserving distorted terrain for every clip.

    - **rng_seed**: Base seed of the rectangles (offset per clip)
    - **n_rectangles**: Rectangles rescaled per terrain
    """
    try:
        directory = catalog_service.get_dataset_dir(db, dataset_id)
        spec = DistortionSpec(rng_seed=request.rng_seed, n_rectangles=request.n_rectangles)
        paths = distortion_service.distort_dataset(directory, spec)
        return {"dataset_id": dataset_id, "n_terrains": len(paths), "paths": [str(p) for p in paths]}
    except ValueError as e:
        raise HTTPException(status_code=404 if _is_missing(e) else 400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))
