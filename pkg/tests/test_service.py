"""HTTP service contract: persistence, concurrency, and error mapping."""

import json
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from beam.campaign import Campaign, CampaignSettings
from beam.server import create_app
from beam.space import ConstraintSet
from beam.storage import load_campaign, save_campaign
from beam.surrogate import SurrogateModel, predict
from tests.conftest import make_full_space, make_plane_space


def make_service(tmp_path, *, space=None, budget=10, batch_size=2, k=5, seed=7):
    space = space or make_plane_space(9, 9)
    campaign = Campaign(
        space,
        ConstraintSet(()),
        CampaignSettings(budget=budget, batch_size=batch_size, k=k, rng_seed=seed),
    )
    path = tmp_path / "c.beam.json"
    save_campaign(campaign, path)
    app = create_app(path, campaign=campaign)
    return TestClient(app), path


# ----------------------------------------------------------------------
# reads
# ----------------------------------------------------------------------


def test_status_reports_space_settings_metrics(tmp_path):
    client, _ = make_service(tmp_path)
    body = client.get("/status").json()
    assert body["state_version"] == 0
    assert body["space"]["cardinality"] == 81
    assert [a["name"] for a in body["space"]["axes"]] == ["x", "y"]
    assert body["space"]["axes"][0]["cardinality"] == 9
    assert body["settings"]["budget"] == 10
    assert body["metrics"]["experiments_used"] == 0
    assert body["metrics"]["fraction_explored"] == 0.0
    assert body["pending_count"] == 0


def test_suggestions_materialize_once_and_persist(tmp_path):
    client, path = make_service(tmp_path)
    first = client.get("/suggestions").json()
    assert len(first["suggestions"]) == 2
    assert first["state_version"] == 1
    for s in first["suggestions"]:
        assert s["alpha"] == s["p"] + s["beta"]
    # the open batch hit the disk before the response left
    on_disk = json.loads(path.read_text())
    assert [p["index"] for p in on_disk["pending"]] == [
        s["index"] for s in first["suggestions"]
    ]
    second = client.get("/suggestions").json()
    assert second == first  # pure read, no recompute, no version bump


# ----------------------------------------------------------------------
# recording
# ----------------------------------------------------------------------


def test_record_by_index_values_and_axis_names(tmp_path):
    client, _ = make_service(tmp_path)
    batch = client.get("/suggestions").json()["suggestions"]

    r1 = client.post(
        "/observations", json={"index": batch[0]["index"], "outcome": 1}
    )
    assert r1.status_code == 200
    assert r1.json()["recorded"]["origin"] == "suggested"

    r2 = client.post(
        "/observations", json={"values": batch[1]["values"], "outcome": 0}
    )
    assert r2.status_code == 200

    r3 = client.post(
        "/observations",
        json={"values": {"y": 8.0, "x": 0.0}, "outcome": 0, "manual": True},
    )
    assert r3.status_code == 200
    assert r3.json()["recorded"]["origin"] == "manual"
    assert r3.json()["recorded"]["values"] == [0.0, 8.0]
    assert r3.json()["metrics"]["experiments_used"] == 3

    history = client.get("/observations").json()["observations"]
    assert [h["outcome"] for h in history] == [1, 0, 0]


def test_record_error_mapping(tmp_path):
    client, _ = make_service(tmp_path)
    batch = client.get("/suggestions").json()["suggestions"]
    free = {"x": 0.0, "y": 0.0}
    if any(s["values"] == [0.0, 0.0] for s in batch):
        free = {"x": 8.0, "y": 8.0}

    r = client.post("/observations", json={"values": [0.5, 0.5], "outcome": 0})
    assert r.status_code == 422 and r.json()["error"] == "off-grid"

    r = client.post(
        "/observations", json={"values": {"x": 0.0, "w": 1.0}, "outcome": 0}
    )
    assert r.status_code == 422 and r.json()["error"] == "validation"
    assert "unknown axis" in r.json()["detail"]

    r = client.post("/observations", json={"values": {"x": 0.0}, "outcome": 0})
    assert r.status_code == 422 and "missing axis" in r.json()["detail"]

    r = client.post("/observations", json={"values": free, "outcome": 2, "manual": True})
    assert r.status_code == 422 and r.json()["error"] == "validation"

    r = client.post("/observations", json={"values": free, "outcome": 0})
    assert r.status_code == 409 and r.json()["error"] == "state"

    r = client.post(
        "/observations",
        json={"index": 3, "values": [0.0, 3.0], "outcome": 0},
    )
    assert r.status_code == 422 and r.json()["error"] == "validation"

    r = client.post("/observations", json={"outcome": 0})
    assert r.status_code == 422


def test_version_conflict_and_pass_through(tmp_path):
    client, _ = make_service(tmp_path)
    batch = client.get("/suggestions").json()["suggestions"]
    live = client.get("/status").json()["state_version"]

    stale = client.post(
        "/observations",
        json={"index": batch[0]["index"], "outcome": 1, "state_version": live - 1},
    )
    assert stale.status_code == 409
    assert stale.json()["error"] == "version-conflict"
    assert stale.json()["state_version"] == live

    ok = client.post(
        "/observations",
        json={"index": batch[0]["index"], "outcome": 1, "state_version": live},
    )
    assert ok.status_code == 200
    assert ok.json()["state_version"] == live + 1


def test_budget_exhaustion_mapped_to_409(tmp_path):
    client, _ = make_service(tmp_path, budget=1, batch_size=1)
    batch = client.get("/suggestions").json()["suggestions"]
    client.post("/observations", json={"index": batch[0]["index"], "outcome": 0})
    r = client.get("/suggestions")
    assert r.status_code == 409
    assert r.json()["error"] == "budget-exhausted"


# ----------------------------------------------------------------------
# seed import and budget extension
# ----------------------------------------------------------------------


def test_seed_import_roundtrip_and_atomicity(tmp_path):
    client, path = make_service(tmp_path)
    good = "x,y,outcome\n0,0,1\n1,1,0\n"
    r = client.post("/seed-import", json={"csv": good})
    assert r.status_code == 200
    assert r.json()["imported"] == 2
    assert r.json()["metrics"]["seed_observations"] == 2
    assert r.json()["metrics"]["budget_remaining"] == 10  # seeds are free

    bad = "x,y,outcome\n2,2,0\n0,0,1\n"  # second row duplicates history
    r = client.post("/seed-import", json={"csv": bad})
    assert r.status_code == 422
    assert "row 2" in r.json()["detail"]
    assert len(client.get("/observations").json()["observations"]) == 2
    assert len(json.loads(path.read_text())["observations"]) == 2


def test_extend_budget_endpoint(tmp_path):
    client, _ = make_service(tmp_path, budget=1, batch_size=1)
    batch = client.get("/suggestions").json()["suggestions"]
    client.post("/observations", json={"index": batch[0]["index"], "outcome": 0})
    r = client.post("/extend-budget", json={"extra": 3})
    assert r.status_code == 200
    assert r.json()["budget"] == 4
    assert client.get("/suggestions").status_code == 200
    r = client.post("/extend-budget", json={"extra": 0})
    assert r.status_code == 422


# ----------------------------------------------------------------------
# posterior slice over the production grid
# ----------------------------------------------------------------------


def production_campaign(tmp_path):
    space = make_full_space()
    campaign = Campaign(
        space,
        ConstraintSet(()),
        CampaignSettings(budget=20, batch_size=2, k=5, rng_seed=3, pool_cap=5000),
    )
    campaign.import_seed(
        [
            ((1.0, 10.0, 10.0, 1600.0, 0.49), 1),
            ((0.4, 7.0, 5.4, 1550.0, 0.17), 1),
            ((0.2, 7.0, 7.0, 1600.0, 0.11), 1),
            ((0.9, 3.0, 0.4, 250.0, 0.45), 0),
            ((0.05, 9.5, 9.8, 300.0, 0.06), 0),
        ]
    )
    path = tmp_path / "prod.beam.json"
    save_campaign(campaign, path)
    return campaign, create_app(path, campaign=campaign)


def test_posterior_slice_matches_direct_prediction(tmp_path):
    campaign, app = production_campaign(tmp_path)
    client = TestClient(app)
    r = client.get(
        "/posterior-slice",
        params={
            "x": "scan",
            "y": "layer",
            "pin": ["feed:0.4", "gas:7.0", "thickness:5.4"],
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["axis_x"] == "scan" and body["axis_y"] == "layer"
    assert len(body["x_values"]) == 29
    assert len(body["y_values"]) == 46
    assert len(body["matrix"]) == 46
    assert all(len(row) == 29 for row in body["matrix"])

    space = campaign.space
    model = SurrogateModel(k=campaign.settings.k, gamma=campaign.settings.gamma)
    for yi in range(0, 46, 5):
        for xi in range(0, 29, 3):
            cfg = space.encode(
                (0.4, 7.0, 5.4, body["x_values"][xi], body["y_values"][yi])
            )
            assert body["matrix"][yi][xi] == predict(model, campaign.dataset, cfg)

    # the pinned axes single out one seeded success for the overlay;
    # coordinates come back as canonical grid values, not input literals
    on_slice = space.encode((0.4, 7.0, 5.4, 1550.0, 0.17))
    assert body["observations"] == [
        {
            "x": on_slice.values[3],
            "y": on_slice.values[4],
            "outcome": 1,
            "origin": "seed-import",
        }
    ]

    again = client.get(
        "/posterior-slice",
        params={
            "x": "scan",
            "y": "layer",
            "pin": ["feed:0.4", "gas:7.0", "thickness:5.4"],
        },
    ).json()
    assert again == body


def test_posterior_slice_validation(tmp_path):
    _, app = production_campaign(tmp_path)
    client = TestClient(app)
    base = {"x": "scan", "y": "layer"}
    r = client.get("/posterior-slice", params=base)
    assert r.status_code == 422  # all non-slice axes must be pinned
    r = client.get(
        "/posterior-slice",
        params={**base, "pin": ["feed:0.4", "gas:7.0", "thickness"]},
    )
    assert r.status_code == 422 and "axis:value" in r.json()["detail"]
    r = client.get(
        "/posterior-slice",
        params={**base, "pin": ["feed:0.4", "gas:7.0", "thickness:soft"]},
    )
    assert r.status_code == 422 and "non-numeric" in r.json()["detail"]
    r = client.get(
        "/posterior-slice",
        params={"x": "scan", "y": "scan", "pin": ["feed:0.4", "gas:7.0", "thickness:5.4", "layer:0.17"]},
    )
    assert r.status_code == 422
    r = client.get(
        "/posterior-slice",
        params={**base, "pin": ["feed:0.4", "gas:7.0", "thickness:5.41"]},
    )
    assert r.status_code == 422 and r.json()["error"] == "off-grid"


# ----------------------------------------------------------------------
# durability and concurrency
# ----------------------------------------------------------------------


def test_restart_recovers_exact_state(tmp_path):
    client, path = make_service(tmp_path)
    batch = client.get("/suggestions").json()["suggestions"]
    client.post("/observations", json={"index": batch[0]["index"], "outcome": 1})

    reborn = TestClient(create_app(path))
    status = reborn.get("/status").json()
    assert status["state_version"] == 2
    assert status["metrics"]["experiments_used"] == 1
    assert status["metrics"]["discovery_rate"] == 1
    # the surviving half of the batch is still pending, not recomputed
    left = reborn.get("/suggestions").json()["suggestions"]
    assert [s["index"] for s in left] == [batch[1]["index"]]
    assert left[0]["suggested_at"] == batch[1]["suggested_at"]


def test_concurrent_manual_records_serialize(tmp_path):
    client, _ = make_service(tmp_path, budget=8)

    def hit(i):
        return client.post(
            "/observations",
            json={"values": [float(i), 0.0], "outcome": 0, "manual": True},
        ).status_code

    with ThreadPoolExecutor(max_workers=8) as pool:
        codes = list(pool.map(hit, range(8)))
    assert codes == [200] * 8
    m = client.get("/status").json()["metrics"]
    assert m["experiments_used"] == 8


def test_dashboard_mount_optional(tmp_path):
    bundle = tmp_path / "dist"
    bundle.mkdir()
    (bundle / "index.html").write_text("<!doctype html><title>beam</title>ok")
    space = make_plane_space(9, 9)
    campaign = Campaign(
        space, ConstraintSet(()), CampaignSettings(budget=5, batch_size=1)
    )
    path = tmp_path / "c.beam.json"
    save_campaign(campaign, path)

    with_ui = TestClient(create_app(path, campaign=campaign, frontend_dir=bundle))
    r = with_ui.get("/")
    assert r.status_code == 200 and "ok" in r.text
    assert with_ui.get("/status").status_code == 200

    without_ui = TestClient(create_app(path))
    assert without_ui.get("/").status_code == 404
