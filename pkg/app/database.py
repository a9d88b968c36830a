"""
Dataset catalog storage.
SQLite-backed engine and sessions for the Dataset and ClipRecord tables.
"""

import logging
from contextlib import contextmanager
from functools import lru_cache
from typing import Generator

from sqlalchemy import create_engine, event
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from app.config import get_settings

logger = logging.getLogger(__name__)

Base = declarative_base()


@lru_cache(maxsize=1)
def catalog_engine() -> Engine:
    """Engine for settings.database_url; SQLite connections enforce foreign keys."""
    url = get_settings().database_url
    if not url.startswith("sqlite"):
        return create_engine(url)

    engine = create_engine(url, connect_args={"check_same_thread": False})

    @event.listens_for(engine, "connect")
    def _enable_foreign_keys(dbapi_conn, _record):
        cursor = dbapi_conn.cursor()
        cursor.execute("PRAGMA foreign_keys=ON")
        cursor.close()

    return engine


@lru_cache(maxsize=1)
def _session_factory() -> sessionmaker:
    return sessionmaker(autocommit=False, autoflush=False, bind=catalog_engine())


def get_db() -> Generator[Session, None, None]:
    """FastAPI dependency yielding a catalog session."""
    with catalog_session() as db:
        yield db


@contextmanager
def catalog_session() -> Generator[Session, None, None]:
    """
    Catalog session for code outside a request, such as the CLI.

    Example:
        with catalog_session() as db:
            generate_dataset(config, planner_config, model, db)
    """
    db = _session_factory()()
    try:
        yield db
    finally:
        db.close()


def init_db() -> None:
    """Create the catalog tables if they do not exist."""
    from app.models import ClipRecord, Dataset  # noqa: F401

    Base.metadata.create_all(bind=catalog_engine())
    logger.info(f"Catalog ready at {get_settings().database_url}")
