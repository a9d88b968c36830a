"""
Dataset repository - Data access layer for Dataset model.
Pure functional approach for database operations.
"""

from typing import List, Optional, Dict, Any
from sqlalchemy.orm import Session
from app.models import Dataset
from app.schemas import DatasetCreate


# ============================================================================
# CREATE Operations
# ============================================================================

def create_dataset(db: Session, dataset_data: DatasetCreate) -> Dataset:
    """
    Create a new dataset record.

    Args:
        db: Database session
        dataset_data: Dataset creation data

    Returns:
        Dataset: Created dataset instance

    Example:
        >>> data = DatasetCreate(name="flat-0", directory="/data/flat-0", n_requested=3, seed_base=0)
        >>> dataset = create_dataset(db, data)
    """
    dataset = Dataset(**dataset_data.model_dump())
    db.add(dataset)
    db.commit()
    db.refresh(dataset)
    return dataset


# ============================================================================
# READ Operations
# ============================================================================

def get_dataset_by_id(db: Session, dataset_id: int) -> Optional[Dataset]:
    """
    Retrieve dataset by ID.

    Args:
        db: Database session
        dataset_id: Dataset ID

    Returns:
        Optional[Dataset]: Dataset instance or None if not found
    """
    return db.query(Dataset).filter(Dataset.id == dataset_id).first()


def get_dataset_by_name(db: Session, name: str) -> Optional[Dataset]:
    """Retrieve dataset by its unique name."""
    return db.query(Dataset).filter(Dataset.name == name).first()


def get_datasets_paginated(db: Session, skip: int = 0, limit: int = 10, status: Optional[str] = None) -> List[Dataset]:
    """
    Retrieve datasets with pagination, newest first.

    Args:
        db: Database session
        skip: Number of records to skip
        limit: Maximum number of records to return
        status: Optional status filter

    Returns:
        List[Dataset]: Paginated list of datasets
    """
    query = db.query(Dataset)
    if status:
        query = query.filter(Dataset.status == status)
    return query.order_by(Dataset.created_at.desc(), Dataset.id.desc()).offset(skip).limit(limit).all()


# ============================================================================
# UPDATE Operations
# ============================================================================

def update_dataset(db: Session, dataset_id: int, updates: Dict[str, Any]) -> Optional[Dataset]:
    """
    Update dataset fields.

    Args:
        db: Database session
        dataset_id: Dataset ID
        updates: Dictionary of fields to update

    Returns:
        Optional[Dataset]: Updated dataset or None if not found

    Example:
        >>> update_dataset(db, 1, {"status": "completed", "convergence_rate": 0.9})
    """
    dataset = get_dataset_by_id(db, dataset_id)
    if not dataset:
        return None

    for key, value in updates.items():
        if hasattr(dataset, key):
            setattr(dataset, key, value)

    db.commit()
    db.refresh(dataset)
    return dataset


# ============================================================================
# DELETE Operations
# ============================================================================

def delete_dataset(db: Session, dataset_id: int) -> bool:
    """
    Delete dataset by ID.
    CASCADE delete removes its clip records; files on disk are left alone.

    Returns:
        bool: True if deleted, False if not found
    """
    dataset = get_dataset_by_id(db, dataset_id)
    if not dataset:
        return False

    db.delete(dataset)
    db.commit()
    return True


# ============================================================================
# COUNT Operations
# ============================================================================

def count_datasets(db: Session, status: Optional[str] = None) -> int:
    """Count datasets, optionally by status."""
    query = db.query(Dataset)
    if status:
        query = query.filter(Dataset.status == status)
    return query.count()
