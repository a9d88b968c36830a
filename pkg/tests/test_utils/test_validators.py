"""
Test suite for validators.
"""

import pytest

from app.exceptions import ConfigError
from app.utils.validators import MAX_SEED, resolve_worker_count, validate_seed_range


@pytest.mark.unit
class TestValidateSeedRange:
    @pytest.mark.parametrize("seed_base, n_clips", [(0, 1), (0, 100), (MAX_SEED, 1)])
    def test_valid(self, seed_base, n_clips):
        assert validate_seed_range(seed_base, n_clips)

    @pytest.mark.parametrize("seed_base, n_clips", [(0, 0), (-1, 5), (MAX_SEED, 2)])
    def test_invalid(self, seed_base, n_clips):
        assert not validate_seed_range(seed_base, n_clips)


@pytest.mark.unit
class TestResolveWorkerCount:
    def test_default_is_one(self):
        assert resolve_worker_count(None, {}) == 1

    def test_environment(self):
        assert resolve_worker_count(None, {"DATAGEN_WORKERS": "4"}) == 4

    def test_flag_wins(self):
        assert resolve_worker_count(2, {"DATAGEN_WORKERS": "4"}) == 2

    def test_empty_environment_value_ignored(self):
        assert resolve_worker_count(None, {"DATAGEN_WORKERS": ""}) == 1

    @pytest.mark.parametrize("flag, environ, match", [
        (0, {}, "--workers must be >= 1"),
        (None, {"DATAGEN_WORKERS": "-3"}, "DATAGEN_WORKERS must be >= 1"),
        (None, {"DATAGEN_WORKERS": "many"}, "must be an integer"),
    ])
    def test_invalid(self, flag, environ, match):
        with pytest.raises(ConfigError, match=match):
            resolve_worker_count(flag, environ)

    def test_reads_process_environment(self, monkeypatch):
        monkeypatch.setenv("DATAGEN_WORKERS", "3")

        assert resolve_worker_count() == 3
