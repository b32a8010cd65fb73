"""First-stage object detection: find boxes, crop them, stage by detector label.

Backends share one contract: a class vocabulary, a confidence floor, and
``detect(image, pixels) -> [Detection]`` sorted by confidence descending.
The annotation-oracle backend echoes ground-truth sidecar files and is
the deterministic stand-in for a trained detector; the noisy wrapper
plants reproducible label errors on top of any backend; the pretrained
adapter wraps a published real-time detector when its package and
weights are available.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence
from urllib.parse import urlparse
from urllib.request import url2pathname

from PIL import Image, UnidentifiedImageError

from .catalog import Catalog, CropRecord, ImageRecord
from .errors import ConfigurationError, CurationError, DetectionError
from .validation import clamp_bbox

VOC_CLASSES = (
    "aeroplane", "bicycle", "bird", "boat", "bottle",
    "bus", "car", "cat", "chair", "cow",
    "diningtable", "dog", "horse", "motorbike", "person",
    "pottedplant", "sheep", "sofa", "train", "tvmonitor",
)

DEFAULT_CONFIDENCE_FLOOR = 0.25


@dataclass(frozen=True)
class Detection:
    """One detector box: class label, confidence, pixel bbox."""

    class_name: str
    confidence: float
    bbox: tuple[float, float, float, float]

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise DetectionError(f"confidence must be in [0,1], got {self.confidence}")
        x_min, y_min, x_max, y_max = self.bbox
        if not (x_min < x_max and y_min < y_max):
            raise DetectionError(f"bbox must be well-ordered, got {self.bbox}")


def origin_path(image: ImageRecord) -> Path:
    """Local filesystem path an image was ingested from."""
    parsed = urlparse(image.origin_uri)
    if parsed.scheme and parsed.scheme != "file":
        raise DetectionError(f"image {image.id} has no local origin: {image.origin_uri}")
    return Path(url2pathname(parsed.path)) if parsed.scheme else Path(image.origin_uri)


class DetectorBackend:
    """Shared backend contract; subclasses implement _detect."""

    name = "base"

    def __init__(self, vocabulary: Sequence[str] = VOC_CLASSES,
                 confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR):
        if not vocabulary:
            raise ConfigurationError("detector vocabulary must be non-empty")
        if not 0.0 <= confidence_floor <= 1.0:
            raise ConfigurationError(
                f"confidence floor must be in [0,1], got {confidence_floor}")
        self.vocabulary = tuple(vocabulary)
        self.confidence_floor = confidence_floor

    def detect(self, image: ImageRecord, pixels: Path) -> list[Detection]:
        """Detections above the confidence floor, confidence descending."""
        try:
            with Image.open(pixels) as img:
                img.load()
        except (UnidentifiedImageError, OSError) as exc:
            raise DetectionError(f"undecodable image {image.id}: {exc}")
        detections = self._detect(image, pixels)
        for d in detections:
            if d.class_name not in self.vocabulary:
                raise DetectionError(
                    f"backend {self.name} emitted out-of-vocabulary class {d.class_name!r}")
        kept = [d for d in detections if d.confidence >= self.confidence_floor]
        return sorted(kept, key=lambda d: -d.confidence)

    def _detect(self, image: ImageRecord, pixels: Path) -> list[Detection]:
        raise NotImplementedError


class AnnotationOracleBackend(DetectorBackend):
    """Echoes ground-truth boxes from a `<stem>.txt` sidecar next to the origin file.

    Sidecar format: one `class x_min y_min x_max y_max` line per object.
    An empty sidecar means zero objects; a missing one is an authoring
    error and raises.
    """

    name = "oracle"

    def _detect(self, image: ImageRecord, pixels: Path) -> list[Detection]:
        sidecar = origin_path(image).with_suffix(".txt")
        if not sidecar.exists():
            raise DetectionError(f"no annotation sidecar for image {image.id}: {sidecar}")
        detections = []
        for line_no, line in enumerate(sidecar.read_text().splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise DetectionError(
                    f"malformed annotation at {sidecar}:{line_no}: {line!r}")
            class_name = parts[0]
            coords = tuple(float(v) for v in parts[1:])
            detections.append(Detection(class_name=class_name, confidence=1.0,
                                         bbox=coords))
        return detections


class NoisyDetectorBackend(DetectorBackend):
    """Plants deterministic label errors on top of another backend.

    Each detection flips to a fixed wrong class with probability
    ``flip_rate``, decided by hashing (seed, origin filename, index), so
    one corpus yields the same planted noise on every run.
    """

    name = "noisy"

    def __init__(self, inner: DetectorBackend, flip_rate: float, seed: int = 0):
        super().__init__(vocabulary=inner.vocabulary,
                         confidence_floor=inner.confidence_floor)
        if not 0.0 <= flip_rate <= 1.0:
            raise ConfigurationError(f"flip rate must be in [0,1], got {flip_rate}")
        if len(inner.vocabulary) < 2 and flip_rate > 0:
            raise ConfigurationError("label flips need at least 2 classes")
        self.inner = inner
        self.flip_rate = flip_rate
        self.seed = seed

    def _hash_unit(self, *parts: str) -> float:
        digest = hashlib.sha1(":".join(parts).encode()).digest()
        return int.from_bytes(digest[:8], "big") / 2 ** 64

    def _detect(self, image: ImageRecord, pixels: Path) -> list[Detection]:
        source = origin_path(image).name
        noisy = []
        for index, d in enumerate(self.inner._detect(image, pixels)):
            if self._hash_unit(str(self.seed), source, str(index), "flip") < self.flip_rate:
                others = [c for c in self.vocabulary if c != d.class_name]
                pick = int(self._hash_unit(str(self.seed), source, str(index), "class")
                           * len(others))
                d = Detection(class_name=others[min(pick, len(others) - 1)],
                              confidence=d.confidence, bbox=d.bbox)
            noisy.append(d)
        return noisy


class PretrainedModelBackend(DetectorBackend):
    """Adapter over a published detector checkpoint (loaded lazily).

    Out-of-vocabulary model outputs are dropped rather than treated as
    errors, since published checkpoints ship larger vocabularies.
    """

    name = "pretrained"

    def __init__(self, weights: str = "yolov10n.pt",
                 vocabulary: Sequence[str] = VOC_CLASSES,
                 confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR):
        super().__init__(vocabulary=vocabulary, confidence_floor=confidence_floor)
        self.weights = weights
        self._model = None

    def _load(self):
        if self._model is None:
            try:
                from ultralytics import YOLO
            except ImportError as exc:
                raise ConfigurationError(
                    f"pretrained detector backend needs the ultralytics package: {exc}")
            self._model = YOLO(self.weights)
        return self._model

    def _detect(self, image: ImageRecord, pixels: Path) -> list[Detection]:
        model = self._load()
        result = model.predict(str(pixels), conf=self.confidence_floor, verbose=False)[0]
        detections = []
        for box in result.boxes:
            class_name = result.names[int(box.cls)]
            if class_name not in self.vocabulary:
                continue
            x_min, y_min, x_max, y_max = (float(v) for v in box.xyxy[0])
            detections.append(Detection(class_name=class_name,
                                        confidence=float(box.conf),
                                        bbox=(x_min, y_min, x_max, y_max)))
        return detections


@dataclass
class StagingReport:
    """Outcome of one staging pass: crops per space plus per-image errors."""

    keyword_crops: list[CropRecord]
    non_keyword_crops: list[CropRecord]
    errors: list[tuple[str, str]]

    @property
    def keyword_count(self) -> int:
        return len(self.keyword_crops)

    @property
    def non_keyword_count(self) -> int:
        return len(self.non_keyword_crops)


def stage_classify(catalog: Catalog, backend: DetectorBackend,
                   images: Iterable[ImageRecord], keyword: str) -> StagingReport:
    """Detect, crop, and stage every image: keyword-labeled crops go to the
    keyword space, everything else to non-keyword. Per-image failures are
    recorded and skipped."""
    if keyword not in backend.vocabulary:
        raise ConfigurationError(
            f"keyword {keyword!r} is not in the detector vocabulary")
    report = StagingReport(keyword_crops=[], non_keyword_crops=[], errors=[])
    with catalog.bulk():
        for image in images:
            try:
                detections = backend.detect(image, catalog.image_file(image.id))
            except CurationError as exc:
                report.errors.append((image.id, str(exc)))
                continue
            for d in detections:
                try:
                    crop = catalog.save_crop(image, d.bbox, d.class_name, d.confidence)
                except CurationError as exc:
                    report.errors.append((image.id, str(exc)))
                    continue
                if d.class_name == keyword:
                    crop = catalog.assign_space(crop.id, "keyword")
                    report.keyword_crops.append(crop)
                else:
                    crop = catalog.assign_space(crop.id, "non-keyword")
                    report.non_keyword_crops.append(crop)
    return report


def match_condition(catalog: Catalog, backend: DetectorBackend,
                    image: ImageRecord, required_classes: Iterable[str]) -> bool:
    """True iff every required class appears among the image's detections."""
    required = set(required_classes)
    unknown = required - set(backend.vocabulary)
    if unknown:
        raise ConfigurationError(
            f"required classes outside the detector vocabulary: {sorted(unknown)}")
    if not required:
        return True
    found = {d.class_name for d in backend.detect(image, catalog.image_file(image.id))}
    return required <= found
