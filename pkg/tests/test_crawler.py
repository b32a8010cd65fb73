import json

import pytest

from imcurator.catalog import Catalog
from imcurator.crawler import (
    CrawlRequest,
    FixtureProvider,
    LiveSearchProvider,
    ProviderRegistry,
    crawl,
)
from imcurator.errors import ConfigurationError, CrawlError, ValidationError

from conftest import image_bytes


def fixture_dir(tmp_path, names, subdir="fixtures"):
    root = tmp_path / subdir
    root.mkdir(parents=True, exist_ok=True)
    for i, name in enumerate(names):
        (root / name).write_bytes(image_bytes(color=(20 * i + 10, 50, 90)))
    return root


def registry_with_fixture(root):
    registry = ProviderRegistry()
    registry.register("fixture", FixtureProvider(root))
    return registry


def test_request_validation():
    with pytest.raises(ValidationError):
        CrawlRequest(keyword="  ", count=5)
    with pytest.raises(ValidationError):
        CrawlRequest(keyword="cat", count=0)
    assert CrawlRequest(keyword="cat", count=1).provider == "fixture"


def test_crawl_respects_count(catalog, tmp_path):
    root = fixture_dir(tmp_path, [f"{c}.png" for c in "abcde"])
    registry = registry_with_fixture(root)
    result = crawl(catalog, registry, CrawlRequest(keyword="cat", count=3))
    assert result.fetched == 3
    assert result.requested == 3
    assert result.failures == []
    assert len(catalog.images()) == 3


def test_crawl_exhausts_small_fixture(catalog, tmp_path):
    root = fixture_dir(tmp_path, ["a.png", "b.png"])
    registry = registry_with_fixture(root)
    result = crawl(catalog, registry, CrawlRequest(keyword="cat", count=100))
    assert result.fetched == 2
    assert result.requested == 100
    assert result.failures == []


def test_crawl_preserves_provider_order(catalog, tmp_path):
    root = fixture_dir(tmp_path, ["c.png", "a.png", "b.png"])
    registry = registry_with_fixture(root)
    result = crawl(catalog, registry, CrawlRequest(keyword="cat", count=10))
    names = [r.origin_uri.rsplit("/", 1)[-1] for r in result.records]
    assert names == ["a.png", "b.png", "c.png"]


def test_crawl_is_deterministic(tmp_path):
    root = fixture_dir(tmp_path, ["a.png", "b.png", "c.png"])
    ids = []
    for run in range(2):
        catalog = Catalog(tmp_path / f"run{run}")
        registry = registry_with_fixture(root)
        result = crawl(catalog, registry, CrawlRequest(keyword="cat", count=3))
        ids.append([r.id for r in result.records])
    assert ids[0] == ids[1]


def test_crawl_lists_failures_without_raising(catalog, tmp_path):
    root = fixture_dir(tmp_path, ["a.png", "c.png"])
    (root / "b.png").write_bytes(b"not really an image")
    registry = registry_with_fixture(root)
    result = crawl(catalog, registry, CrawlRequest(keyword="cat", count=10))
    assert result.fetched == 2
    assert len(result.failures) == 1
    assert result.failures[0][0].endswith("b.png")
    assert len(catalog.images()) == 2


def test_fixture_provider_ignores_sidecars(tmp_path):
    root = fixture_dir(tmp_path, ["a.png"])
    (root / "a.txt").write_text("circle 0 0 10 10")
    provider = FixtureProvider(root)
    assert all(uri.endswith(".png") for uri in provider.candidates("cat", 10))


def test_fixture_provider_keyword_subdir(tmp_path):
    root = fixture_dir(tmp_path, ["top.png"])
    fixture_dir(root, ["k1.png", "k2.png"], subdir="cat")
    provider = FixtureProvider(root)
    cat_uris = provider.candidates("cat", 10)
    assert len(cat_uris) == 2
    assert all("/cat/" in uri for uri in cat_uris)
    assert len(provider.candidates("dog", 10)) == 1


def test_fixture_provider_missing_root(tmp_path):
    with pytest.raises(ConfigurationError):
        FixtureProvider(tmp_path / "missing")


def test_registry_contract(tmp_path):
    root = fixture_dir(tmp_path, ["a.png"])
    registry = ProviderRegistry()
    registry.register("fixture", FixtureProvider(root))
    with pytest.raises(ConfigurationError):
        registry.register("fixture", FixtureProvider(root))
    with pytest.raises(ConfigurationError):
        registry.get("live-search")
    assert registry.names() == ["fixture"]


def test_crawl_with_unregistered_provider(catalog, tmp_path):
    registry = ProviderRegistry()
    with pytest.raises(ConfigurationError):
        crawl(catalog, registry, CrawlRequest(keyword="cat", count=1, provider="fixture"))


def test_live_provider_unreachable_endpoint():
    provider = LiveSearchProvider("http://127.0.0.1:9/search", timeout=0.2)
    with pytest.raises(CrawlError):
        provider.candidates("cat", 3)
    with pytest.raises(ConfigurationError):
        LiveSearchProvider("")


def test_live_provider_happy_path(monkeypatch, catalog):
    payload = {"http://img/one.png": image_bytes(color=(255, 0, 0)),
               "http://img/two.png": image_bytes(color=(0, 255, 0))}

    class FakeResponse:
        def __init__(self, content):
            self.content = content

        def raise_for_status(self):
            pass

        def json(self):
            return json.loads(self.content)

    def fake_get(url, params=None, timeout=None):
        if params is not None:
            return FakeResponse(json.dumps(list(payload)).encode())
        return FakeResponse(payload[url])

    import requests

    monkeypatch.setattr(requests, "get", fake_get)
    registry = ProviderRegistry()
    registry.register("live-search", LiveSearchProvider("http://search.test/api"))
    result = crawl(catalog, registry,
                   CrawlRequest(keyword="cat", count=2, provider="live-search"))
    assert result.fetched == 2
    assert [r.source for r in result.records] == ["crawl", "crawl"]
    assert {r.origin_uri for r in result.records} == set(payload)
