"""
Test setup validation - verify test environment is working correctly.
Run this first to ensure fixtures and database setup work properly.
"""

from types import SimpleNamespace
from unittest.mock import patch

from sqlalchemy import text

from app import database
from app.config import get_settings
from app.models import ClipRecord, Dataset


def test_database_session_works(db_session):
    """Verify database session fixture works."""
    assert db_session.query(Dataset).all() == []


def test_dataset_factory_creates_dataset(dataset_factory):
    """Verify dataset factory fixture works."""
    dataset = dataset_factory(name="factory_test")

    assert dataset.id is not None
    assert dataset.name == "factory_test"
    assert dataset.status == "completed"


def test_clip_record_factory_links_dataset(db_session, dataset_factory, clip_record_factory):
    """Verify clip records attach to their dataset."""
    dataset = dataset_factory()
    record = clip_record_factory(dataset.id, seed=4)

    assert record.dataset_id == dataset.id
    assert db_session.query(ClipRecord).filter(ClipRecord.dataset_id == dataset.id).count() == 1


def test_settings_point_at_temporary_storage(setup_test_env):
    """Verify settings were redirected away from the working directory."""
    settings = get_settings()

    assert settings.datasets_dir == setup_test_env / "datasets"
    assert settings.robot_config_path.name == "anymal_b.cfg"


def test_clip_factory_shapes(clip_factory):
    """Verify the synthetic clip factory."""
    clip = clip_factory(horizon=1.0)

    assert clip.n_frames == 101
    assert clip.ee_pos.shape == (101, 4, 3)


def test_catalog_session_uses_configured_database(tmp_path):
    """Verify the catalog helpers create tables and enforce foreign keys."""
    settings = SimpleNamespace(database_url=f"sqlite:///{tmp_path / 'catalog.db'}")
    database.catalog_engine.cache_clear()
    database._session_factory.cache_clear()
    try:
        with patch("app.database.get_settings", return_value=settings):
            database.init_db()
            with database.catalog_session() as db:
                assert db.query(Dataset).all() == []
                assert db.execute(text("PRAGMA foreign_keys")).scalar() == 1
        assert (tmp_path / "catalog.db").exists()
    finally:
        database.catalog_engine.cache_clear()
        database._session_factory.cache_clear()
