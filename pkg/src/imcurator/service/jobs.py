"""Curation jobs: the crawl, detect, score, reclassify pipeline with states.

A bounded worker pool executes jobs; a per-keyword lock keeps one writer
per class space at a time, so jobs on distinct keywords run concurrently
without interleaving catalog mutations for the same class.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from ..calibrator import LabeledDistance, ThresholdProfile, build_profile
from ..catalog import Catalog
from ..crawler import (
    CrawlRequest,
    FixtureProvider,
    LiveSearchProvider,
    ProviderRegistry,
    crawl,
)
from ..detector import (
    AnnotationOracleBackend,
    DetectorBackend,
    NoisyDetectorBackend,
    PretrainedModelBackend,
    stage_classify,
)
from ..errors import (
    CalibrationError,
    ConfigurationError,
    ContractError,
    CurationError,
    JobNotReadyError,
    NotFoundError,
    StaleResultError,
    ValidationError,
)
from ..reclassifier import apply, decision
from ..siamese import ContrastiveEmbedder, score_crops
from .config import ServiceConfig

JOB_STATES = ("queued", "crawling", "detecting", "scoring", "reclassifying",
              "done", "failed")
_ORDER = {name: rank for rank, name in enumerate(JOB_STATES)}
_RESULT_STATES = ("reclassifying", "done")


@dataclass
class CurationJob:
    """One keyword curation request and everything its pipeline recorded."""

    id: str
    keyword: str
    count: int
    level: int
    state: str = "queued"
    progress: dict[str, int] = field(default_factory=dict)
    error: Optional[str] = None
    created_at: str = ""
    scored_sha: Optional[str] = None
    priors: dict[str, str] = field(default_factory=dict)
    distances: dict[str, float] = field(default_factory=dict)

    def to_view(self) -> dict:
        return {
            "id": self.id,
            "keyword": self.keyword,
            "count": self.count,
            "level": self.level,
            "state": self.state,
            "progress": dict(self.progress),
            "error": self.error,
            "created_at": self.created_at,
        }


@dataclass
class Runtime:
    """The wired dependencies one service process runs against."""

    config: ServiceConfig
    catalog: Catalog
    registry: ProviderRegistry
    backend: DetectorBackend
    embedder: Optional[ContrastiveEmbedder]
    runner: "JobRunner"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class JobRunner:
    """Executes curation jobs on a bounded pool, one writer per keyword."""

    def __init__(self, catalog: Catalog, registry: ProviderRegistry,
                 backend: DetectorBackend,
                 embedder: Optional[ContrastiveEmbedder] = None,
                 provider: str = "fixture", default_level: int = 3,
                 workers: int = 2):
        self._catalog = catalog
        self._registry = registry
        self._backend = backend
        self._embedder = embedder
        self._provider = provider
        self._default_level = default_level
        self._executor = ThreadPoolExecutor(max_workers=workers)
        self._jobs: dict[str, CurationJob] = {}
        self._futures: dict[str, object] = {}
        self._lock = threading.RLock()
        self._keyword_locks: dict[str, threading.Lock] = {}

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return tuple(self._backend.vocabulary)

    def submit(self, keyword: str, count: int, level: Optional[int] = None) -> CurationJob:
        """Queue a pipeline run; unknown keywords are rejected up front."""
        if keyword not in self._backend.vocabulary:
            raise ValidationError(f"keyword {keyword!r} is not in the detector vocabulary")
        if count < 1:
            raise ValidationError(f"count must be >= 1, got {count}")
        effective_level = self._default_level if level is None else level
        if not 1 <= effective_level <= 5:
            raise ValidationError(f"level must be in [1, 5], got {effective_level}")
        job = CurationJob(id=uuid.uuid4().hex[:12], keyword=keyword, count=count,
                          level=effective_level, created_at=_now())
        with self._lock:
            self._jobs[job.id] = job
            self._futures[job.id] = self._executor.submit(self._run, job)
        return job

    def get(self, job_id: str) -> CurationJob:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise NotFoundError(f"unknown job: {job_id}")
        return job

    def wait(self, job_id: str, timeout: float = 120.0) -> CurationJob:
        """Block until the job reaches a terminal state."""
        with self._lock:
            future = self._futures.get(job_id)
        if future is None:
            raise NotFoundError(f"unknown job: {job_id}")
        future.result(timeout=timeout)
        return self.get(job_id)

    def results(self, job_id: str, level: Optional[int] = None,
                limit: int = 50, offset: int = 0) -> dict:
        """Decisions recomputed over stored distances; no re-scoring ever.

        The level override only changes the threshold handed to the
        decision rule, which is what makes it cheap and exact.
        """
        job = self.get(job_id)
        if job.state == "failed":
            raise JobNotReadyError(f"job {job_id} failed: {job.error}")
        if job.state not in _RESULT_STATES:
            raise JobNotReadyError(
                f"job {job_id} is {job.state}; results appear once scoring completes")
        if limit < 1:
            raise ValidationError(f"limit must be >= 1, got {limit}")
        if offset < 0:
            raise ValidationError(f"offset must be >= 0, got {offset}")
        if self._catalog.anchor_sha(job.keyword) != job.scored_sha:
            raise StaleResultError(
                f"anchor for {job.keyword!r} changed after scoring; "
                f"recalibrate the class to refresh distances")
        effective = job.level if level is None else level
        if not 1 <= effective <= 5:
            raise ValidationError(f"level must be in [1, 5], got {effective}")
        profile = self._catalog.load_profile(job.keyword)
        threshold = profile.threshold_for(effective)
        with self._lock:
            stored = sorted(job.distances.items(), key=lambda kv: (kv[1], kv[0]))
            priors = dict(job.priors)
        items = []
        for crop_id, distance in stored:
            verdict = decision(crop_id, priors[crop_id], distance, threshold)
            items.append({
                "crop_id": crop_id,
                "distance": distance,
                "prior": verdict.prior,
                "final": verdict.final,
                "changed": verdict.changed,
                "image_url": f"/images/{crop_id}",
            })
        return {
            "job_id": job_id,
            "level": effective,
            "threshold": threshold,
            "total": len(items),
            "items": items[offset:offset + limit],
        }

    def mark_rescored(self, class_name: str) -> None:
        """Refresh job distances after the class was re-scored in the catalog."""
        sha = self._catalog.anchor_sha(class_name)
        with self._lock:
            jobs = [job for job in self._jobs.values()
                    if job.keyword == class_name and job.distances]
        for job in jobs:
            refreshed = {}
            for crop_id in job.distances:
                record = self._catalog.get_crop(crop_id)
                if record.distance is not None:
                    refreshed[crop_id] = record.distance
            with self._lock:
                job.distances.update(refreshed)
                job.scored_sha = sha

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)

    def _keyword_lock(self, keyword: str) -> threading.Lock:
        with self._lock:
            return self._keyword_locks.setdefault(keyword, threading.Lock())

    def _advance(self, job: CurationJob, state: str) -> None:
        with self._lock:
            if _ORDER[state] <= _ORDER[job.state]:
                raise ContractError(
                    f"job state may not move from {job.state} to {state}")
            job.state = state

    def _fail(self, job: CurationJob, message: str) -> None:
        with self._lock:
            job.state = "failed"
            job.error = message

    def _count(self, job: CurationJob, **counters: int) -> None:
        with self._lock:
            job.progress.update(counters)

    def _run(self, job: CurationJob) -> None:
        try:
            with self._keyword_lock(job.keyword):
                self._advance(job, "crawling")
                fetched = crawl(self._catalog, self._registry,
                                CrawlRequest(job.keyword, job.count, self._provider))
                self._count(job, crawled=len(fetched.records),
                            fetch_failures=len(fetched.failures))

                self._advance(job, "detecting")
                staged = stage_classify(self._catalog, self._backend,
                                        fetched.records, job.keyword)
                crops = [crop for crop in staged.keyword_crops + staged.non_keyword_crops
                         if self._catalog.crop_class(crop) == job.keyword]
                with self._lock:
                    job.priors = {crop.id: crop.space for crop in crops}
                self._count(job, staged=len(crops), detect_errors=len(staged.errors))

                self._advance(job, "scoring")
                if self._embedder is None:
                    raise ConfigurationError(
                        "no embedder checkpoint configured; train one first")
                if not self._catalog.has_profile(job.keyword):
                    raise CalibrationError(
                        f"no calibrated profile for {job.keyword!r}; calibrate first")
                scores = score_crops(self._catalog, self._embedder, crops,
                                     against=job.keyword)
                with self._lock:
                    job.distances = {s.crop_id: s.distance for s in scores}
                    job.scored_sha = self._catalog.anchor_sha(job.keyword)
                self._count(job, scored=len(scores))

                self._advance(job, "reclassifying")
                profile = self._catalog.load_profile(job.keyword)
                outcome = apply(self._catalog, job.keyword, scores,
                                profile.threshold_for(job.level), level=job.level)
                self._count(job, moved_in=len(outcome.moved_in),
                            moved_out=len(outcome.moved_out),
                            unchanged=outcome.unchanged_count)
                self._advance(job, "done")
        except CurationError as exc:
            self._fail(job, str(exc))
        except Exception as exc:  # jobs must land in a terminal state
            self._fail(job, f"{type(exc).__name__}: {exc}")


def calibrate_space(catalog: Catalog, embedder: Optional[ContrastiveEmbedder],
                    class_name: str) -> ThresholdProfile:
    """Re-score a class space against its anchor and rebuild its profile.

    Space membership is the label source: the operator-curated keyword
    side counts as positive. Scoring first means a fresh anchor's
    distances land in the catalog before the profile binds to its hash.
    """
    if embedder is None:
        raise ConfigurationError("no embedder checkpoint configured; train one first")
    space = catalog.class_space(class_name)
    member_ids = sorted(space.keyword_members | space.non_keyword_members)
    if not member_ids:
        raise CalibrationError(f"no staged crops to calibrate {class_name!r} from")
    members = [catalog.get_crop(crop_id) for crop_id in member_ids]
    scores = score_crops(catalog, embedder, members, against=class_name)
    samples = [LabeledDistance(s.distance, s.crop_id in space.keyword_members)
               for s in scores]
    profile = build_profile(class_name, samples)
    catalog.save_profile(profile)
    return profile


def build_runtime(config: ServiceConfig) -> Runtime:
    """Wire catalog, provider registry, detector, embedder, and runner."""
    config.check_paths()
    catalog = Catalog(config.catalog_root, classes=config.classes or None)
    registry = ProviderRegistry()
    if config.fixture_root is not None:
        registry.register("fixture", FixtureProvider(config.fixture_root))
    if config.search_endpoint:
        registry.register("live", LiveSearchProvider(config.search_endpoint))
    vocabulary = config.classes or AnnotationOracleBackend().vocabulary
    if config.detector == "oracle":
        backend: DetectorBackend = AnnotationOracleBackend(vocabulary=vocabulary)
    elif config.detector == "noisy-oracle":
        backend = NoisyDetectorBackend(AnnotationOracleBackend(vocabulary=vocabulary),
                                       flip_rate=config.flip_rate, seed=config.seed)
    else:
        backend = PretrainedModelBackend(vocabulary=vocabulary)
    embedder = None
    if config.embedder_path is not None:
        embedder = ContrastiveEmbedder.load(config.embedder_path)
    runner = JobRunner(catalog, registry, backend, embedder,
                       provider=config.provider, default_level=config.default_level)
    return Runtime(config=config, catalog=catalog, registry=registry,
                   backend=backend, embedder=embedder, runner=runner)
