#!/usr/bin/env python3
"""
Tests for the ErgoLab HTTP API
"""

import pytest
from fastapi.testclient import TestClient

from ergolab import __version__
from ergolab.main import EXPERIMENTS, create_app

SMALL_SYSTEM = {"p1": "n^5", "p2": "2*n^5", "M": 2, "horizon": 4, "f": "list:3",
                "omega_per_point": 4, "budget": 1_000_000}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "running"
    assert data["version"] == __version__
    assert "/experiments/triple" in data["endpoints"]


def test_status(client):
    data = client.get("/status").json()
    assert data["experiments"] == EXPERIMENTS
    assert data["available_workers"] >= 1


def test_llt(client):
    response = client.post("/experiments/llt", json={"n_values": [100, 400]})
    assert response.status_code == 200
    data = response.json()
    assert data["passed"]
    assert [row["n"] for row in data["rows"]] == [100, 400]


def test_series_rejects_bad_growth(client):
    response = client.post("/experiments/series", json={"growth": "poly:n/2"})
    assert response.status_code == 400


def test_certify_small_system(client):
    response = client.post("/experiments/certify", json={"system": SMALL_SYSTEM, "samples": 6})
    assert response.status_code == 200
    assert len(response.json()["rows"]) == 6


def test_low_degree_is_rejected(client):
    system = {**SMALL_SYSTEM, "p1": "n^4"}
    response = client.post("/experiments/certify", json={"system": system, "samples": 2})
    assert response.status_code == 400
    assert "degree 4" in response.json()["detail"]


def test_budget_is_reported(client):
    system = {**SMALL_SYSTEM, "budget": 1000}
    response = client.post("/experiments/triple", json={"system": system, "samples": 4})
    assert response.status_code == 413


def test_request_validation(client):
    response = client.post("/experiments/llt", json={"n_values": "many"})
    assert response.status_code == 422
