"""
Tests for the application entry point.
"""

from fastapi.testclient import TestClient

from app.main import app


def test_health_check(setup_test_env):
    client = TestClient(app)

    response = client.get("/health")

    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "healthy"
    assert data["storage"]["datasets_dir"] == str(setup_test_env / "datasets")


def test_routers_mounted():
    paths = {route.path for route in app.routes}

    assert {"/api/datasets", "/api/terrains", "/api/tracking/rewards", "/health"} <= paths
