"""Keyword image acquisition through pluggable search providers.

A provider lists candidate URIs for a keyword and fetches their bytes;
``crawl`` downloads up to the requested count with bounded fan-out and
registers each image in the catalog. Per-item failures are collected,
never raised. The fixture provider serves files from a local directory
in deterministic order; the live provider talks to a configured search
endpoint and is deliberately thin.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .catalog import Catalog, ImageRecord
from .errors import ConfigurationError, CrawlError, CurationError, ValidationError

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}
DEFAULT_FAN_OUT = 4


@dataclass(frozen=True)
class CrawlRequest:
    """What to fetch: keyword, how many, from which provider."""

    keyword: str
    count: int
    provider: str = "fixture"

    def __post_init__(self):
        if not self.keyword or not self.keyword.strip():
            raise ValidationError("keyword must be non-blank")
        if self.count < 1:
            raise ValidationError(f"count must be >= 1, got {self.count}")


@dataclass
class CrawlResult:
    """Fetched records plus per-URI failures for one crawl."""

    records: list[ImageRecord]
    requested: int
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def fetched(self) -> int:
        return len(self.records)


class SearchProvider:
    """Provider contract: list candidate URIs, then fetch each one."""

    name = "base"

    def candidates(self, keyword: str, count: int) -> list[str]:
        raise NotImplementedError

    def fetch(self, uri: str) -> bytes:
        raise NotImplementedError


class FixtureProvider(SearchProvider):
    """Serves image files from a local directory, lexicographic order.

    A ``<root>/<keyword>/`` subdirectory takes precedence when present,
    so one fixture tree can back several keywords. Annotation sidecars
    and other non-image files are ignored.
    """

    name = "fixture"

    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise ConfigurationError(f"fixture root does not exist: {self.root}")

    def candidates(self, keyword: str, count: int) -> list[str]:
        base = self.root / keyword
        if not base.is_dir():
            base = self.root
        files = sorted(p for p in base.iterdir()
                       if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
        return [p.as_uri() for p in files[:count]]

    def fetch(self, uri: str) -> bytes:
        from urllib.parse import urlparse
        from urllib.request import url2pathname

        return Path(url2pathname(urlparse(uri).path)).read_bytes()


class LiveSearchProvider(SearchProvider):
    """Queries a search endpoint returning a JSON array of image URLs."""

    name = "live-search"

    def __init__(self, endpoint: str, timeout: float = 10.0, delay: float = 0.0):
        if not endpoint:
            raise ConfigurationError("live-search provider needs an endpoint")
        self.endpoint = endpoint
        self.timeout = timeout
        self.delay = delay

    def candidates(self, keyword: str, count: int) -> list[str]:
        import requests

        try:
            response = requests.get(self.endpoint,
                                    params={"q": keyword, "count": count},
                                    timeout=self.timeout)
            response.raise_for_status()
            urls = response.json()
        except requests.RequestException as exc:
            raise CrawlError(f"search endpoint unreachable: {exc}")
        except ValueError as exc:
            raise CrawlError(f"search endpoint returned malformed JSON: {exc}")
        if not isinstance(urls, list):
            raise CrawlError("search endpoint must return a JSON array of URLs")
        return [str(u) for u in urls[:count]]

    def fetch(self, uri: str) -> bytes:
        import requests

        if self.delay:
            time.sleep(self.delay)
        response = requests.get(uri, timeout=self.timeout)
        response.raise_for_status()
        return response.content


class ProviderRegistry:
    """Name -> provider instance map used to resolve CrawlRequest.provider."""

    def __init__(self):
        self._providers: dict[str, SearchProvider] = {}

    def register(self, name: str, provider: SearchProvider):
        if name in self._providers:
            raise ConfigurationError(f"provider {name!r} is already registered")
        self._providers[name] = provider

    def get(self, name: str) -> SearchProvider:
        if name not in self._providers:
            raise ConfigurationError(f"no provider registered under {name!r}")
        return self._providers[name]

    def names(self) -> list[str]:
        return sorted(self._providers)


def crawl(catalog: Catalog, registry: ProviderRegistry, request: CrawlRequest,
          fan_out: int = DEFAULT_FAN_OUT) -> CrawlResult:
    """Fetch up to request.count images and register them in the catalog.

    Records come back in provider order regardless of download
    concurrency; every failed URI lands in failures instead of raising.
    """
    provider = registry.get(request.provider)
    uris = provider.candidates(request.keyword, request.count)
    result = CrawlResult(records=[], requested=request.count)

    def fetch_one(uri: str) -> tuple[str, Optional[bytes], Optional[str]]:
        try:
            return uri, provider.fetch(uri), None
        except Exception as exc:
            return uri, None, str(exc)

    with ThreadPoolExecutor(max_workers=max(1, fan_out)) as pool:
        fetched = list(pool.map(fetch_one, uris))
    with catalog.bulk():
        for uri, content, failure in fetched:
            if failure is not None:
                result.failures.append((uri, failure))
                continue
            try:
                result.records.append(
                    catalog.add_crawled_image(content, uri, request.keyword))
            except CurationError as exc:
                result.failures.append((uri, str(exc)))
    return result
