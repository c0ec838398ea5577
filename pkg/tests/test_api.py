import pytest
from httpx import AsyncClient

from app.config import settings
from tests.helpers import TIGHT_ALPHA


@pytest.mark.asyncio
async def test_health(client: AsyncClient):
    response = await client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy"}
    assert "X-Process-Time" in response.headers


@pytest.mark.asyncio
async def test_certify_nonlocal(client: AsyncClient):
    """Test certifying a point beyond the S0 support."""
    response = await client.post(
        "/api/1.0/certify",
        params={"threads": 1},
        json={"data": {"N": 10, "constraints": [{"coefficients": {"S0": 1}, "value": 25}]}},
    )
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["verdict"] == "nonlocal"
    assert data["certificate"]["passed"] is True
    assert data["inequality"]["alpha"]["S0"] == pytest.approx(-0.04, abs=1e-7)


@pytest.mark.asyncio
async def test_certify_unknown_correlator(client: AsyncClient):
    response = await client.post(
        "/api/1.0/certify",
        json={"data": {"N": 10, "constraints": [{"coefficients": {"S2": 1}, "value": 0}]}},
    )
    assert response.status_code == 400
    error = response.json()["errors"][0]
    assert error["phrase"] == "invalid_request"
    assert "S2" in error["message"]


@pytest.mark.asyncio
async def test_certify_without_data(client: AsyncClient):
    response = await client.post("/api/1.0/certify", json={})
    assert response.status_code == 400
    assert response.json()["errors"][0]["phrase"] == "invalid_request"


@pytest.mark.asyncio
async def test_certify_inconsistent_constraints(client: AsyncClient):
    constraints = [{"coefficients": {"S0": 1}, "value": 1}, {"coefficients": {"S0": 1}, "value": 2}]
    response = await client.post("/api/1.0/certify", json={"data": {"N": 10, "constraints": constraints}})
    assert response.status_code == 400
    assert response.json()["errors"][0]["phrase"] == "inconsistent_constraints"


@pytest.mark.asyncio
async def test_unsupported_level(client: AsyncClient):
    response = await client.post(
        "/api/1.0/certify",
        json={"data": {"N": 10, "mu": 4, "constraints": [{"coefficients": {"S0": 1}, "value": 1}]}},
    )
    assert response.status_code == 400
    assert response.json()["errors"][0]["phrase"] == "unsupported_scenario"


@pytest.mark.asyncio
async def test_bound(client: AsyncClient):
    response = await client.post(
        "/api/1.0/bound",
        params={"threads": 1},
        json={"data": {"N": 10, "inequality": {"alpha": TIGHT_ALPHA, "betaC": 20}}},
    )
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["minimum"] == 0
    assert data["exact_minimum"] == "0"
    assert data["tight"] is True


@pytest.mark.asyncio
async def test_bound_over_budget(client: AsyncClient, monkeypatch):
    monkeypatch.setattr(settings, "VERTEX_BUDGET", 10)
    response = await client.post("/api/1.0/bound", json={"data": {"N": 10, "alpha": {"S0": 1}}})
    assert response.status_code == 413


@pytest.mark.asyncio
async def test_hull(client: AsyncClient):
    response = await client.post(
        "/api/1.0/hull",
        json={"data": {"N": 2, "plane": {"kind": "projection", "axes": [{"S0": 1}, {"S1": 1}]}}},
    )
    assert response.status_code == 200
    assert len(response.json()["data"]["vertices"]) == 4


@pytest.mark.asyncio
async def test_scan_csv(client: AsyncClient):
    response = await client.post(
        "/api/1.0/scan",
        params={"format": "csv", "threads": 1},
        json={"data": {"N": 4, "rays": 3, "plane": {"axes": [{"S0": 1}, {"S1": 1}]}}},
    )
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/csv")
    assert response.headers["x-format-version"] == "1.0"
    lines = response.text.split("\n")
    assert lines[0] == "theta,lambda_sdp,r_hull"
    assert len([line for line in lines[1:] if line]) == 3


@pytest.mark.asyncio
async def test_export(client: AsyncClient):
    response = await client.post("/api/1.0/export", json={"data": {"N": 10}})
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/plain")
    assert response.text.startswith('"format_version 1.0')
