"""HTTP adapter: every endpoint is a thin wrapper over pipeline operations."""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .. import __version__
from ..calibrator import LabeledDistance
from ..errors import (
    CalibrationError,
    ConfigurationError,
    CurationError,
    IngestionError,
    JobNotReadyError,
    NotFoundError,
    RejectionError,
    StaleResultError,
    ValidationError,
)
from ..metrics import density
from .config import ServiceConfig
from .jobs import Runtime, build_runtime, calibrate_space

_STATUS: tuple[tuple[type, int], ...] = (
    (ValidationError, 422),
    (RejectionError, 422),
    (IngestionError, 422),
    (NotFoundError, 404),
    (JobNotReadyError, 409),
    (StaleResultError, 409),
    (CalibrationError, 409),
    (ConfigurationError, 409),
)


def _status_for(exc: CurationError) -> int:
    for exc_type, status in _STATUS:
        if isinstance(exc, exc_type):
            return status
    return 400


class JobRequest(BaseModel):
    keyword: str
    count: int = Field(default=10, ge=1)
    level: Optional[int] = Field(default=None, ge=1, le=5)


def create_app(config: ServiceConfig, runtime: Optional[Runtime] = None) -> FastAPI:
    """Build the service around an existing runtime, or wire one up."""
    runtime = runtime if runtime is not None else build_runtime(config)
    catalog = runtime.catalog
    runner = runtime.runner
    app = FastAPI(title="imcurator", version=__version__)
    app.state.runtime = runtime

    @app.exception_handler(CurationError)
    async def curation_error(request: Request, exc: CurationError) -> JSONResponse:
        return JSONResponse(status_code=_status_for(exc),
                            content={"detail": str(exc),
                                     "error": type(exc).__name__})

    @app.post("/jobs")
    def submit_job(body: JobRequest) -> dict:
        job = runner.submit(body.keyword, body.count, body.level)
        return {"job_id": job.id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        return runner.get(job_id).to_view()

    @app.get("/jobs/{job_id}/results")
    def get_results(job_id: str,
                    level: Optional[int] = Query(default=None, ge=1, le=5),
                    limit: int = Query(default=50, ge=1, le=500),
                    offset: int = Query(default=0, ge=0)) -> dict:
        return runner.results(job_id, level=level, limit=limit, offset=offset)

    @app.get("/classes")
    def list_classes() -> dict:
        anchors = catalog.anchor_set().entries
        rows = []
        for name in runner.vocabulary:
            rows.append({
                "class": name,
                "anchor": name in anchors,
                "profile": catalog.has_profile(name),
                "profile_stale": catalog.is_profile_stale(name),
            })
        return {"classes": rows, "default_level": runtime.config.default_level}

    @app.put("/anchors/{class_name}")
    async def put_anchor(class_name: str, request: Request) -> dict:
        if class_name not in runner.vocabulary:
            raise ValidationError(
                f"class {class_name!r} is not in the detector vocabulary")
        content = await request.body()
        before = catalog.anchor_sha(class_name)
        catalog.set_anchor(class_name, content)
        after = catalog.anchor_sha(class_name)
        return {
            "class": class_name,
            "sha": after,
            "changed": before != after,
            "profile_stale": catalog.is_profile_stale(class_name),
        }

    @app.post("/calibrate/{class_name}")
    def calibrate(class_name: str) -> dict:
        if class_name not in runner.vocabulary:
            raise ValidationError(
                f"class {class_name!r} is not in the detector vocabulary")
        profile = calibrate_space(catalog, runtime.embedder, class_name)
        runner.mark_rescored(class_name)
        return profile.to_json_dict()

    @app.get("/classes/{class_name}/density")
    def class_density(class_name: str,
                      bins: int = Query(default=20, ge=1),
                      level: Optional[int] = Query(default=None, ge=1, le=5)) -> dict:
        if not catalog.has_profile(class_name):
            raise NotFoundError(f"no calibrated profile for {class_name!r}")
        profile = catalog.load_profile(class_name)
        space = catalog.class_space(class_name)
        members = [catalog.get_crop(crop_id)
                   for crop_id in sorted(space.keyword_members | space.non_keyword_members)]
        scores = [LabeledDistance(crop.distance, crop.space == "keyword")
                  for crop in members if crop.distance is not None]
        effective = runtime.config.default_level if level is None else level
        histogram = density(scores, bins=bins, markers={
            "fp0": profile.fp0,
            "fn0": profile.fn0,
            "threshold": profile.threshold_for(effective),
        })
        return {"class": class_name, "level": effective,
                "sample_count": len(scores), **histogram.to_json_dict()}

    @app.get("/reports/compare")
    def compare_report() -> dict:
        try:
            return catalog.load_report("compare")
        except NotFoundError:
            raise NotFoundError("no comparison report yet; run the evaluate command")

    @app.get("/images/{crop_id}")
    def crop_image(crop_id: str) -> FileResponse:
        return FileResponse(catalog.crop_file(crop_id), media_type="image/png")

    ui_root = runtime.config.ui_root
    if ui_root is not None and ui_root.exists():
        app.mount("/ui", StaticFiles(directory=ui_root, html=True), name="ui")

    return app
