"""
Integration tests for terrains router.
"""

import pytest
from fastapi import FastAPI
from fastapi.testclient import TestClient
from pathlib import Path
from unittest.mock import patch

from app.routers import terrains


@pytest.fixture
def client():
    """Create test client for the terrains router."""
    app = FastAPI()
    app.include_router(terrains.router)
    return TestClient(app)


class TestGenerateTerrain:
    """Tests for POST /api/terrains endpoint."""

    def test_generate_slits(self, client, setup_test_env):
        response = client.post("/api/terrains", json={"kind": "slits", "seed": 5})

        assert response.status_code == 201
        data = response.json()
        assert data["kind"] == "slits"
        assert data["boxes_path"] is None
        assert Path(data["heightfield_path"]) == setup_test_env / "terrains" / "slits_5.txt"
        assert Path(data["heightfield_path"]).exists()

    def test_unknown_kind_rejected(self, client):
        response = client.post("/api/terrains", json={"kind": "lava"})

        assert response.status_code == 422

    @patch("app.routers.terrains.envgen_service.generate_track_files")
    def test_audit_failure(self, mock_generate, client):
        mock_generate.side_effect = ValueError("Track stairs seed=1 violates its parameter ranges")

        response = client.post("/api/terrains", json={"kind": "stairs", "seed": 1})

        assert response.status_code == 400

    @patch("app.routers.terrains.envgen_service.generate_track_files")
    def test_unexpected_error(self, mock_generate, client):
        mock_generate.side_effect = OSError("read-only file system")

        response = client.post("/api/terrains", json={"kind": "stairs", "seed": 1})

        assert response.status_code == 500
        assert "Terrain generation failed" in response.json()["detail"]
