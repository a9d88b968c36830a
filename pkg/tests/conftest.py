"""
Pytest configuration and shared fixtures for testing.
Provides database setup, session management, and test data factories.
"""

import pytest
import tempfile
import uuid
import os
from pathlib import Path

import numpy as np
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from app.config import reset_settings
from app.core.dataset import TrajectoryClip
from app.core.heightfield import HeightField, flat_terrain
from app.core.robot_model import RobotModel, load_robot_model, robot_model_hash
from app.database import Base
from app.models import Dataset, ClipRecord
from app.schemas import PipelineConfig, PlannerConfig, SolveOptions
from app.services import generation_service

REPO_ROOT = Path(__file__).resolve().parents[1]
ROBOT_CONFIG = REPO_ROOT / "config" / "anymal_b.cfg"


# ============================================================================
# Configuration Fixtures
# ============================================================================

@pytest.fixture(scope="session", autouse=True)
def setup_test_env(tmp_path_factory):
    """
    Point settings at a temporary storage tree.
    Auto-used for all tests so nothing is written into the working directory.
    """
    root = tmp_path_factory.mktemp("storage")
    env = {
        "DATAGEN_STORAGE_ROOT": str(root),
        "DATAGEN_DATASETS_DIR": str(root / "datasets"),
        "DATAGEN_TERRAINS_DIR": str(root / "terrains"),
        "DATAGEN_DATABASE_URL": "sqlite:///:memory:",
        "DATAGEN_ROBOT_CONFIG_PATH": str(ROBOT_CONFIG),
    }
    previous = {key: os.environ.get(key) for key in env}
    os.environ.update(env)
    reset_settings()
    yield root
    # Cleanup after all tests
    for key, value in previous.items():
        if value is None:
            os.environ.pop(key, None)
        else:
            os.environ[key] = value
    reset_settings()


# ============================================================================
# Database Fixtures
# ============================================================================

@pytest.fixture(scope="session")
def test_engine():
    """
    Create a test database engine using SQLite in-memory.
    Session-scoped: created once for entire test session.
    """
    engine = create_engine(
        "sqlite:///:memory:",
        connect_args={"check_same_thread": False},
        echo=False
    )

    Base.metadata.create_all(bind=engine)

    yield engine

    Base.metadata.drop_all(bind=engine)
    engine.dispose()


@pytest.fixture(scope="function")
def db_session(test_engine):
    """
    Create a new database session for each test.
    Function-scoped: every test runs inside a transaction that is rolled back.

    Yields:
        Session: SQLAlchemy database session
    """
    connection = test_engine.connect()
    transaction = connection.begin()

    SessionLocal = sessionmaker(bind=connection)
    session = SessionLocal()

    yield session

    session.close()
    transaction.rollback()
    connection.close()


# ============================================================================
# File System Fixtures
# ============================================================================

@pytest.fixture(scope="function")
def temp_storage_dir():
    """
    Create temporary storage directory for file tests.

    Yields:
        Path: Temporary directory path with datasets/ and terrains/
    """
    with tempfile.TemporaryDirectory() as tmpdir:
        temp_path = Path(tmpdir)
        (temp_path / "datasets").mkdir()
        (temp_path / "terrains").mkdir()
        yield temp_path


# ============================================================================
# Domain Fixtures
# ============================================================================

@pytest.fixture(scope="session")
def robot_model() -> RobotModel:
    """Robot description shipped in config/."""
    return load_robot_model(ROBOT_CONFIG)


@pytest.fixture
def flat_field() -> HeightField:
    """16x16 flat field at 0.1 m with the procedural layout."""
    return flat_terrain(height=0.1)


@pytest.fixture
def ramp_field() -> HeightField:
    """16x16 field rising 0.5 m per m along x, starting at x = 0."""
    field = flat_terrain()
    xs = field.origin[0] + field.cell_size * np.arange(field.rows)
    return field.with_heights(np.repeat(0.5 * xs[:, None], field.cols, axis=1))


@pytest.fixture
def desk_planner_config() -> PlannerConfig:
    """Short horizon flat-ground planning problem."""
    return PlannerConfig(horizon=2.0, goal_displacement=0.5, solve=SolveOptions(time_budget_s=120.0))


@pytest.fixture
def standing_planner_config() -> PlannerConfig:
    """Static standing problem: one stance phase per leg, goal at the start."""
    return PlannerConfig(
        horizon=1.0,
        goal_displacement=0.0,
        n_stance_phases=1,
        init_pos_noise_sigma=0.0,
        init_force_noise_sigma=0.0,
        solve=SolveOptions(feas_tol=1e-5, time_budget_s=60.0),
    )


# ============================================================================
# Clip Factories (Test Data Generators)
# ============================================================================

@pytest.fixture
def clip_factory(robot_model):
    """
    Factory for synthetic walking clips.

    The CoM moves forward at vx; every leg alternates stance and swing
    according to the given per-leg phase durations.

    Example:
        def test_clip(clip_factory):
            clip = clip_factory(vx=0.3)
    """
    def _create_clip(
        horizon: float = 2.0,
        vx: float = 0.25,
        phase_durations=((0.5, 0.5, 1.0),) * 4,
        rng_seed: int = 7,
        terrain: HeightField = None,
    ) -> TrajectoryClip:
        n = int(round(horizon * 100)) + 1
        t = np.arange(n) / 100.0
        com = np.column_stack([vx * t, np.zeros(n), np.full(n, 0.48)])
        linvel = np.tile([vx, 0.0, 0.0], (n, 1))
        quat = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
        offsets = robot_model.box_centers.copy()
        offsets[:, 2] = 0.0
        ee = com[:, None, :] * np.array([1.0, 1.0, 0.0]) + offsets[None, :, :]
        flags = np.zeros((n, 4))
        for leg, durations in enumerate(phase_durations):
            edges = np.concatenate([[0.0], np.cumsum(durations)])
            for k, tk in enumerate(t):
                phase = min(int(np.searchsorted(edges, tk, side="left")) - 1, len(durations) - 1)
                flags[k, leg] = 1.0 if max(phase, 0) % 2 == 0 else 0.0
        return TrajectoryClip(
            terrain=terrain if terrain is not None else flat_terrain(),
            com_pos=com.astype(np.float32),
            com_linvel=linvel.astype(np.float32),
            com_angvel=np.zeros((n, 3), dtype=np.float32),
            base_quat=quat.astype(np.float32),
            ee_pos=ee.astype(np.float32),
            contact_flags=flags.astype(np.float32),
            q=np.zeros((n, 12), dtype=np.float32),
            qdot=np.zeros((n, 12), dtype=np.float32),
            horizon=horizon,
            robot_hash=robot_model_hash(robot_model),
            rng_seed=rng_seed,
            terrain_seed=rng_seed,
            phase_durations=tuple(tuple(d) for d in phase_durations),
        )

    return _create_clip


# ============================================================================
# Catalog Factories
# ============================================================================

@pytest.fixture
def dataset_factory(db_session):
    """Factory for creating Dataset test instances."""
    def _create_dataset(**kwargs):
        unique_id = uuid.uuid4().hex[:8]
        defaults = {
            "name": f"test_dataset_{unique_id}",
            "directory": f"/storage/datasets/test_dataset_{unique_id}",
            "n_requested": 3,
            "seed_base": 0,
            "distortion": False,
            "status": "completed",
            "convergence_rate": 1.0,
        }
        defaults.update(kwargs)

        dataset = Dataset(**defaults)
        db_session.add(dataset)
        db_session.commit()
        db_session.refresh(dataset)
        return dataset

    return _create_dataset


@pytest.fixture
def clip_record_factory(db_session):
    """Factory for creating ClipRecord test instances."""
    def _create_clip_record(dataset_id, **kwargs):
        defaults = {
            "dataset_id": dataset_id,
            "seed": 0,
            "status": "converged",
            "max_violation": 1e-5,
            "iterations": 12,
            "wall_time_s": 3.5,
        }
        defaults.update(kwargs)

        record = ClipRecord(**defaults)
        db_session.add(record)
        db_session.commit()
        db_session.refresh(record)
        return record

    return _create_clip_record


# ============================================================================
# Dataset Fixtures
# ============================================================================

@pytest.fixture
def standing_dataset(tmp_path, robot_model, standing_planner_config):
    """
    Two-clip dataset planned on flat ground with the standing configuration.

    Yields:
        Path: Dataset directory with summary.json and clip_000000, clip_000001
    """
    config = PipelineConfig(n_clips=2, output_dir=tmp_path / "standing", flat_terrain=True, name="standing")
    generation_service.generate_dataset(config, standing_planner_config, robot_model)
    yield config.output_dir
