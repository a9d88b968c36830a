"""
Clip record repository - Data access layer for ClipRecord model.
Pure functional approach for database operations.
"""

from typing import List, Optional
from sqlalchemy.orm import Session
from app.models import ClipRecord
from app.schemas import ClipRecordCreate


# ============================================================================
# CREATE Operations
# ============================================================================

def create_clip_record(db: Session, record_data: ClipRecordCreate) -> ClipRecord:
    """
    Create a new clip record.

    Args:
        db: Database session
        record_data: Clip outcome data

    Returns:
        ClipRecord: Created record
    """
    record = ClipRecord(**record_data.model_dump())
    db.add(record)
    db.commit()
    db.refresh(record)
    return record


def create_clip_records(db: Session, records: List[ClipRecordCreate]) -> List[ClipRecord]:
    """Create several clip records in one transaction."""
    rows = [ClipRecord(**r.model_dump()) for r in records]
    db.add_all(rows)
    db.commit()
    for row in rows:
        db.refresh(row)
    return rows


# ============================================================================
# READ Operations
# ============================================================================

def get_clip_record_by_id(db: Session, record_id: int) -> Optional[ClipRecord]:
    """Retrieve clip record by ID."""
    return db.query(ClipRecord).filter(ClipRecord.id == record_id).first()


def get_clip_records_by_dataset(
    db: Session,
    dataset_id: int,
    status: Optional[str] = None,
    skip: int = 0,
    limit: Optional[int] = None,
) -> List[ClipRecord]:
    """
    Retrieve clip records of a dataset ordered by seed.

    Args:
        db: Database session
        dataset_id: Dataset ID
        status: Optional status filter (converged, failed, rejected)
        skip: Number of records to skip
        limit: Maximum number of records to return (all when None)

    Returns:
        List[ClipRecord]: Matching records
    """
    query = db.query(ClipRecord).filter(ClipRecord.dataset_id == dataset_id)
    if status:
        query = query.filter(ClipRecord.status == status)
    query = query.order_by(ClipRecord.seed).offset(skip)
    if limit is not None:
        query = query.limit(limit)
    return query.all()


# ============================================================================
# COUNT Operations
# ============================================================================

def count_clip_records(db: Session, dataset_id: int, status: Optional[str] = None) -> int:
    """Count clip records of a dataset, optionally by status."""
    query = db.query(ClipRecord).filter(ClipRecord.dataset_id == dataset_id)
    if status:
        query = query.filter(ClipRecord.status == status)
    return query.count()
