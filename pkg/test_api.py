"""HTTP API tests against the ASGI app, without a running server."""

import httpx
import pytest

from app.config import Settings
from app.main import app
from app.routers import experiments as experiments_router

API = "/api/v1"


@pytest.fixture
def client():
    transport = httpx.ASGITransport(app=app)
    return httpx.AsyncClient(transport=transport, base_url="http://test")


@pytest.fixture
def isolated_settings(tmp_path, monkeypatch):
    settings = Settings(reference_dir=str(tmp_path / "references"), optimizer_starts=2)
    monkeypatch.setattr(experiments_router.experiment_service, "settings", settings)
    monkeypatch.setattr(experiments_router, "get_settings", lambda: settings)
    return settings


@pytest.mark.asyncio
async def test_health_and_status(client):
    async with client:
        health = await client.get("/health")
        status = await client.get(f"{API}/status")

    assert health.status_code == 200
    assert health.json()["status"] == "healthy"
    assert "X-Process-Time" in health.headers
    assert status.json()["defaults"]["eps_bar"] == 0.2
    assert status.json()["endpoints"]["experiments"] == f"{API}/experiments"


@pytest.mark.asyncio
async def test_list_benchmarks(client):
    async with client:
        response = await client.get(f"{API}/benchmarks")

    assert response.status_code == 200
    presets = {preset["name"]: preset for preset in response.json()}
    assert set(presets) == {"toy", "ishigami", "bouc_wen"}
    assert presets["bouc_wen"]["tail_mode"] == "ccdf_only"


@pytest.mark.asyncio
async def test_evaluate_benchmark(client):
    async with client:
        response = await client.post(f"{API}/benchmarks/toy/evaluate", json={"points": [[1, 2], [3, -4]]})

    assert response.status_code == 200
    body = response.json()
    assert body["outputs"] == [-1.0, -1.0]
    assert body["n_model_calls"] == 2


@pytest.mark.asyncio
@pytest.mark.parametrize("name,payload,expected", [
    ("rosenbrock", {"points": [[0, 0]]}, 404),
    ("toy", {"points": [[1, 2, 3]]}, 400),
    ("toy", {"points": [[1, 2], [3]]}, 400),
    ("toy", {"points": []}, 422),
])
async def test_evaluate_rejects_bad_requests(client, name, payload, expected):
    async with client:
        response = await client.post(f"{API}/benchmarks/{name}/evaluate", json=payload)
    assert response.status_code == expected


@pytest.mark.asyncio
async def test_experiment_job_flow(client, tmp_path, isolated_settings):
    payload = {"benchmark": "toy", "runs": 1, "pool_size": 2000, "budget": 1,
               "output_dir": str(tmp_path / "results")}
    async with client:
        submitted = await client.post(f"{API}/experiments", json=payload)
        assert submitted.status_code == 202
        job_id = submitted.json()["job_id"]
        fetched = await client.get(f"{API}/experiments/{job_id}")

    assert fetched.status_code == 200
    view = fetched.json()
    assert view["job"]["status"] == "completed"
    assert view["aggregate"]["benchmark"] == "toy"
    assert len(view["aggregate"]["manifest"]) == 1


@pytest.mark.asyncio
@pytest.mark.parametrize("payload,expected", [
    ({"benchmark": "rosenbrock"}, 404),
    ({"benchmark": "toy", "y_min": 4.0}, 400),
    ({"benchmark": "toy", "y_min": 1.0, "y_max": -1.0}, 422),
    ({"benchmark": "toy", "runs": 0}, 422),
])
async def test_experiment_rejects_bad_configuration(client, isolated_settings, payload, expected):
    async with client:
        response = await client.post(f"{API}/experiments", json=payload)
    assert response.status_code == expected


@pytest.mark.asyncio
async def test_unknown_job_is_not_found(client):
    async with client:
        response = await client.get(f"{API}/experiments/does-not-exist")
    assert response.status_code == 404


@pytest.mark.asyncio
async def test_reference_generation(client, isolated_settings):
    async with client:
        created = await client.post(f"{API}/references", json={"benchmark": "toy"})
        unknown = await client.post(f"{API}/references", json={"benchmark": "rosenbrock"})

    assert created.status_code == 200
    assert created.json()["exact"] is True
    assert created.json()["path"].startswith(isolated_settings.reference_dir)
    assert unknown.status_code == 404
