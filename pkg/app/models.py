"""
SQLAlchemy ORM models for the dataset catalog.
Mirrors the summary manifests written to each dataset directory.
"""

from datetime import datetime, timezone
from sqlalchemy import Column, Integer, String, Text, Float, DateTime, ForeignKey, Boolean
from sqlalchemy.orm import relationship
from app.database import Base


def utc_now():
    """Get current UTC time (timezone-aware)."""
    return datetime.now(timezone.utc)


class BaseModel(Base):
    __abstract__ = True
    id = Column(Integer, primary_key=True, autoincrement=True, index=True)
    created_at = Column(DateTime, default=utc_now, nullable=False)
    updated_at = Column(DateTime, default=utc_now, onupdate=utc_now, nullable=False)


class Dataset(BaseModel):
    """A generation run: one directory of clips for a seed range."""

    __tablename__ = "datasets"

    name = Column(String(255), nullable=False, unique=True, index=True)
    directory = Column(String(1024), nullable=False, unique=True)
    n_requested = Column(Integer, nullable=False)
    seed_base = Column(Integer, default=0, nullable=False)
    distortion = Column(Boolean, default=False, nullable=False)
    convergence_rate = Column(Float, nullable=True)  # converged / attempted
    status = Column(String(50), default="running", nullable=False)  # running, completed, failed

    # Relationships
    clips = relationship("ClipRecord", back_populates="dataset", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<Dataset(id={self.id}, name='{self.name}', status='{self.status}')>"


class ClipRecord(BaseModel):
    """Outcome of one seed: converged clip, failed solve or rejected clip."""

    __tablename__ = "clip_records"

    dataset_id = Column(Integer, ForeignKey("datasets.id", ondelete="CASCADE"), nullable=False, index=True)
    seed = Column(Integer, nullable=False)
    status = Column(String(50), nullable=False)  # converged, failed, rejected
    max_violation = Column(Float, nullable=True)
    iterations = Column(Integer, nullable=True)
    wall_time_s = Column(Float, nullable=True)
    clip_path = Column(String(1024), nullable=True)
    message = Column(Text, nullable=True)

    # Relationships
    dataset = relationship("Dataset", back_populates="clips")

    def __repr__(self):
        return f"<ClipRecord(id={self.id}, dataset_id={self.dataset_id}, seed={self.seed}, status='{self.status}')>"
