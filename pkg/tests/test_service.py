"""Service layer: config wiring, the job pipeline, and the HTTP adapter."""

import threading
import time

import pytest
from fastapi.testclient import TestClient

from imcurator.catalog import Catalog
from imcurator.crawler import ProviderRegistry, SearchProvider
from imcurator.errors import (
    CalibrationError,
    ConfigurationError,
    JobNotReadyError,
    NotFoundError,
    ValidationError,
)
from imcurator.evaluation import ExperimentConfig, make_backend, run_experiment
from imcurator.service import ServiceConfig, create_app, load_config
from imcurator.service.jobs import JobRunner, build_runtime, calibrate_space
from imcurator.synthetic import CLASSES, make_anchor_image

EXPERIMENT = ExperimentConfig(images_per_class=12, epochs=2, flip_rate=0.2, seed=5)


@pytest.fixture(scope="module")
def primed(tmp_path_factory):
    """Catalog with corpus, checkpoint, anchors, profiles, and report."""
    root = tmp_path_factory.mktemp("service") / "catalog"
    catalog = Catalog(root)
    result = run_experiment(catalog, root / "fixtures", EXPERIMENT)
    result.embedder.save(root / "embedder.pt")
    return root


@pytest.fixture(scope="module")
def client(primed):
    config = ServiceConfig(catalog_root=primed, fixture_root=primed / "fixtures",
                           embedder_path=primed / "embedder.pt", classes=CLASSES)
    app = create_app(config)
    with TestClient(app) as test_client:
        test_client.runner = app.state.runtime.runner
        yield test_client
    app.state.runtime.runner.shutdown()


def _finished_job(client, keyword="circle", count=6, level=1) -> str:
    response = client.post("/jobs", json={"keyword": keyword, "count": count,
                                          "level": level})
    assert response.status_code == 200
    job_id = response.json()["job_id"]
    client.runner.wait(job_id)
    return job_id


def _kept(body) -> set:
    return {item["crop_id"] for item in body["items"] if item["final"] == "keyword"}


# configuration


def test_config_validates_choices(tmp_path):
    with pytest.raises(ConfigurationError):
        ServiceConfig(catalog_root=tmp_path, provider="gopher")
    with pytest.raises(ConfigurationError):
        ServiceConfig(catalog_root=tmp_path, fixture_root=tmp_path, detector="guesser")
    with pytest.raises(ConfigurationError):
        ServiceConfig(catalog_root=tmp_path, fixture_root=tmp_path, default_level=9)
    with pytest.raises(ConfigurationError):
        ServiceConfig(catalog_root=tmp_path)  # fixture provider needs a root


def test_config_check_paths_requires_existing_references(tmp_path):
    config = ServiceConfig(catalog_root=tmp_path / "catalog",
                           fixture_root=tmp_path / "missing")
    with pytest.raises(ConfigurationError, match="missing"):
        config.check_paths()


def test_load_config_reports_missing_file(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(ConfigurationError, match=str(missing)):
        load_config(missing)


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"catalog_root": "c", "fixture_root": "f", "portt": 1}')
    with pytest.raises(ConfigurationError, match="portt"):
        load_config(path)


def test_load_config_round_trip(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"catalog_root": "cat", "fixture_root": "fix",'
                    ' "classes": ["circle", "square"], "port": 9000}')
    config = load_config(path)
    assert config.classes == ("circle", "square")
    assert config.port == 9000


def test_load_config_resolves_paths_relative_to_file(tmp_path):
    nested = tmp_path / "conf"
    nested.mkdir()
    path = nested / "service.json"
    path.write_text('{"catalog_root": "../cat", "fixture_root": "fix"}')
    config = load_config(path)
    assert config.catalog_root == (tmp_path / "cat").resolve()
    assert config.fixture_root == (nested / "fix").resolve()


# job pipeline


def test_job_reaches_done_with_consistent_counts(client):
    job_id = _finished_job(client, count=6)
    view = client.get(f"/jobs/{job_id}").json()
    assert view["state"] == "done"
    progress = view["progress"]
    assert progress["crawled"] == 6
    assert progress["staged"] == progress["scored"] == 6
    assert progress["moved_in"] + progress["moved_out"] + progress["unchanged"] == 6
    body = client.get(f"/jobs/{job_id}/results").json()
    assert body["total"] == 6


def test_submit_validations(client):
    assert client.post("/jobs", json={"keyword": "zeppelin", "count": 3}).status_code == 422
    assert client.post("/jobs", json={"keyword": "circle", "count": 0}).status_code == 422
    assert client.post("/jobs", json={"keyword": "circle", "count": 3,
                                      "level": 0}).status_code == 422
    assert client.post("/jobs", json={"keyword": "circle", "count": 3,
                                      "level": 6}).status_code == 422


def test_unknown_job_is_404(client):
    assert client.get("/jobs/nope").status_code == 404
    assert client.get("/jobs/nope/results").status_code == 404


def test_results_override_matches_stored_level_exactly(client):
    job_id = _finished_job(client, level=2)
    stored = client.get(f"/jobs/{job_id}/results").json()
    override = client.get(f"/jobs/{job_id}/results", params={"level": 2}).json()
    assert override == stored


def test_results_keyword_sets_shrink_with_level(client):
    job_id = _finished_job(client, count=8, level=1)
    kept_by_level = [
        _kept(client.get(f"/jobs/{job_id}/results", params={"level": level}).json())
        for level in (1, 2, 3, 4, 5)
    ]
    for looser, stricter in zip(kept_by_level, kept_by_level[1:]):
        assert stricter <= looser


def test_results_pagination_slices_sorted_items(client):
    job_id = _finished_job(client, count=6)
    full = client.get(f"/jobs/{job_id}/results").json()
    page = client.get(f"/jobs/{job_id}/results",
                      params={"limit": 2, "offset": 1}).json()
    assert page["total"] == full["total"]
    assert page["items"] == full["items"][1:3]
    distances = [item["distance"] for item in full["items"]]
    assert distances == sorted(distances)


def test_results_fields_are_complete(client):
    job_id = _finished_job(client, count=4)
    for item in client.get(f"/jobs/{job_id}/results").json()["items"]:
        assert set(item) == {"crop_id", "distance", "prior", "final", "changed",
                             "image_url"}
        assert item["image_url"] == f"/images/{item['crop_id']}"
        assert item["changed"] == (item["prior"] != item["final"])


def test_job_without_profile_fails_at_scoring(primed, tmp_path):
    config = ServiceConfig(catalog_root=tmp_path / "bare",
                           fixture_root=primed / "fixtures",
                           embedder_path=primed / "embedder.pt", classes=CLASSES)
    app = create_app(config)
    with TestClient(app) as bare:
        response = bare.post("/jobs", json={"keyword": "circle", "count": 3})
        job_id = response.json()["job_id"]
        app.state.runtime.runner.wait(job_id)
        view = bare.get(f"/jobs/{job_id}").json()
        assert view["state"] == "failed"
        assert "profile" in view["error"]
        results = bare.get(f"/jobs/{job_id}/results")
        assert results.status_code == 409
        assert "failed" in results.json()["detail"]
    app.state.runtime.runner.shutdown()


def test_results_before_scoring_are_not_ready(primed):
    release = threading.Event()

    class SlowProvider(SearchProvider):
        def candidates(self, keyword, count):
            release.wait(timeout=10)
            return []

        def fetch(self, uri):  # pragma: no cover - candidates is empty
            raise AssertionError

    catalog = Catalog(primed)
    registry = ProviderRegistry()
    registry.register("fixture", SlowProvider())
    runner = JobRunner(catalog, registry, make_backend(CLASSES))
    try:
        job = runner.submit("circle", count=2)
        deadline = time.monotonic() + 5
        while runner.get(job.id).state != "crawling":
            assert time.monotonic() < deadline
            time.sleep(0.01)
        with pytest.raises(JobNotReadyError, match="crawling"):
            runner.results(job.id)
    finally:
        release.set()
        runner.shutdown()


def test_runner_rejects_bad_paging(client):
    job_id = _finished_job(client)
    assert client.get(f"/jobs/{job_id}/results",
                      params={"limit": 0}).status_code == 422
    assert client.get(f"/jobs/{job_id}/results",
                      params={"offset": -1}).status_code == 422
    assert client.get(f"/jobs/{job_id}/results",
                      params={"level": 0}).status_code == 422


# classes, anchors, calibration


def test_classes_lists_vocabulary_with_status(client):
    body = client.get("/classes").json()
    assert body["default_level"] == 3
    rows = {row["class"]: row for row in body["classes"]}
    assert set(rows) == set(CLASSES)
    for row in rows.values():
        assert row["anchor"] and row["profile"]


def test_anchor_replacement_invalidates_then_calibrate_recovers(client):
    job_id = _finished_job(client, keyword="square")
    replaced = client.put("/anchors/square",
                          content=make_anchor_image("square", seed=123))
    assert replaced.status_code == 200
    assert replaced.json()["changed"] is True
    assert replaced.json()["profile_stale"] is True
    stale = client.get(f"/jobs/{job_id}/results")
    assert stale.status_code == 409
    assert "anchor" in stale.json()["detail"]
    calibrated = client.post("/calibrate/square")
    assert calibrated.status_code == 200
    assert calibrated.json()["class"] == "square"
    recovered = client.get(f"/jobs/{job_id}/results")
    assert recovered.status_code == 200
    assert not client.get("/classes/square/density").json()["markers"] is None


def test_anchor_same_bytes_is_a_no_op(client):
    content = make_anchor_image("square", seed=123)
    first = client.put("/anchors/square", content=content).json()
    second = client.put("/anchors/square", content=content).json()
    assert second["sha"] == first["sha"]
    assert second["changed"] is False


def test_anchor_validations(client):
    assert client.put("/anchors/zeppelin", content=b"x").status_code == 422
    assert client.put("/anchors/circle", content=b"not an image").status_code == 422


def test_calibrate_unknown_class_is_422(client):
    assert client.post("/calibrate/zeppelin").status_code == 422


def test_calibrate_space_requires_embedder_and_crops(primed, tmp_path):
    catalog = Catalog(tmp_path / "empty", classes=CLASSES)
    with pytest.raises(ConfigurationError, match="embedder"):
        calibrate_space(catalog, None, "circle")
    from imcurator.siamese import ContrastiveEmbedder

    embedder = ContrastiveEmbedder.load(primed / "embedder.pt")
    with pytest.raises(CalibrationError, match="no staged crops"):
        calibrate_space(catalog, embedder, "circle")


# density and reports


def test_density_bins_and_markers(client):
    _finished_job(client, keyword="circle")
    body = client.get("/classes/circle/density", params={"bins": 8, "level": 4}).json()
    assert body["class"] == "circle"
    assert body["level"] == 4
    assert len(body["bin_edges"]) == 9
    assert set(body["markers"]) == {"fp0", "fn0", "threshold"}
    counted = sum(body["keyword_counts"]) + sum(body["other_counts"])
    assert counted == body["sample_count"]


def test_density_missing_profile_is_404(primed, tmp_path):
    config = ServiceConfig(catalog_root=tmp_path / "blank",
                           fixture_root=primed / "fixtures", classes=CLASSES)
    app = create_app(config)
    with TestClient(app) as blank:
        assert blank.get("/classes/circle/density").status_code == 404
        assert blank.get("/reports/compare").status_code == 404
    app.state.runtime.runner.shutdown()


def test_compare_report_served(client):
    body = client.get("/reports/compare").json()
    assert body["methods"] == ["detector-only", "detector+classifier",
                               "detector+siamese"]
    assert body["classes"] == sorted(CLASSES)


def test_crop_image_bytes_served(client):
    job_id = _finished_job(client, count=3)
    item = client.get(f"/jobs/{job_id}/results").json()["items"][0]
    response = client.get(item["image_url"])
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"
    assert response.content[:8] == b"\x89PNG\r\n\x1a\n"
    assert client.get("/images/nope").status_code == 404


def test_ui_mounted_when_root_exists(primed, tmp_path):
    ui = tmp_path / "dist"
    ui.mkdir()
    (ui / "index.html").write_text("<title>curator</title>")
    config = ServiceConfig(catalog_root=primed, fixture_root=primed / "fixtures",
                           embedder_path=primed / "embedder.pt", classes=CLASSES,
                           ui_root=ui)
    app = create_app(config)
    with TestClient(app) as with_ui:
        response = with_ui.get("/ui/")
        assert response.status_code == 200
        assert "curator" in response.text
    app.state.runtime.runner.shutdown()


def test_build_runtime_loads_embedder_and_vocabulary(primed):
    config = ServiceConfig(catalog_root=primed, fixture_root=primed / "fixtures",
                           embedder_path=primed / "embedder.pt", classes=CLASSES)
    runtime = build_runtime(config)
    try:
        assert runtime.embedder is not None
        assert runtime.runner.vocabulary == CLASSES
        assert runtime.registry.names() == ["fixture"]
    finally:
        runtime.runner.shutdown()
