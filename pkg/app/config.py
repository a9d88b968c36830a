"""
Configuration settings for the trajectory dataset toolkit.
Uses pydantic-settings for environment variable management.
"""

from pathlib import Path
from typing import Optional, TypeVar
from pydantic import BaseModel, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.robot_model import RobotModel, load_robot_model
from app.exceptions import ConfigError
from app.schemas import PlannerConfig, TrackingConfig

ModelT = TypeVar("ModelT", bound=BaseModel)


class Settings(BaseSettings):
    """Process configuration loaded from environment variables (prefix DATAGEN_)."""

    # Catalog database
    database_url: str = "sqlite:///./storage/catalog.db"

    # Storage paths
    storage_root: Path = Path("./storage")
    datasets_dir: Path = Path("./storage/datasets")
    terrains_dir: Path = Path("./storage/terrains")

    # Worker pool (DATAGEN_WORKERS overrides)
    workers: int = 1

    # Component configuration files
    robot_config_path: Path = Path("./config/anymal_b.cfg")
    planner_config_path: Optional[Path] = None
    tracking_config_path: Optional[Path] = None

    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="DATAGEN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get application settings instance (singleton pattern).

    Returns:
        Settings: Application configuration settings
    """
    global _settings
    if _settings is None:
        _settings = Settings()

        # Ensure storage directories exist
        for directory in [
            _settings.storage_root,
            _settings.datasets_dir,
            _settings.terrains_dir,
        ]:
            directory.mkdir(parents=True, exist_ok=True)

    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    global _settings
    _settings = None


# ============================================================================
# Component Configuration Files
# ============================================================================

def _load_json_model(model_cls: type[ModelT], path: Optional[Path]) -> ModelT:
    if path is None:
        return model_cls()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{model_cls.__name__} file not found: {path}")
    try:
        return model_cls.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigError(f"Invalid {model_cls.__name__} in {path}: {str(e)}") from e


def load_planner_config(path: Optional[Path] = None) -> PlannerConfig:
    """
    Load a planner configuration from JSON, or the defaults when no path is given.

    Raises:
        ConfigError: If the file is missing or fails validation
    """
    return _load_json_model(PlannerConfig, path)


def load_tracking_config(path: Optional[Path] = None) -> TrackingConfig:
    """Load a tracking configuration from JSON, or the defaults when no path is given."""
    return _load_json_model(TrackingConfig, path)


def load_robot(path: Optional[Path] = None) -> RobotModel:
    """Load the robot description, falling back to settings.robot_config_path."""
    return load_robot_model(path or get_settings().robot_config_path)
