"""Persistent catalog of images, crops, anchors, and per-class threshold profiles.

Layout under one root directory:

    manifest.jsonl        one JSON object per image/crop record
    images/<id><ext>      original image bytes
    crops/<class>/<space>/<id>.png
    anchors/<class><ext>  anchor image per class, plus anchors.json index
    profiles/<class>.json calibrated threshold profiles
    reports/<name>.json   evaluation and reclassification reports

Crops are re-encoded as PNG so repeated save/load cycles cannot perturb
embeddings. The class segment of a crop path is the keyword of its
parent image (the class space the crop lives in); the detector label is
metadata on the record. All mutations are serialized through one lock
and flushed atomically (write temp, then rename).
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import threading
from contextlib import contextmanager
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence

from PIL import Image, UnidentifiedImageError

from .errors import IngestionError, NotFoundError, RejectionError, ValidationError
from .validation import clamp_bbox

SPACES = ("keyword", "non-keyword", "unassigned")
ASSIGNABLE_SPACES = ("keyword", "non-keyword")
SOURCES = ("crawl", "local-import")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _sha1(*parts: bytes) -> str:
    digest = hashlib.sha1()
    for part in parts:
        digest.update(part)
    return digest.hexdigest()


@dataclass
class ImageRecord:
    """One stored source image."""

    id: str
    source: str
    origin_uri: str
    keyword: str
    pixels_path: str
    width: int
    height: int
    fetched_at: str

    def to_json_dict(self) -> dict:
        return {"kind": "image", "id": self.id, "source": self.source,
                "origin_uri": self.origin_uri, "keyword": self.keyword,
                "pixels_path": self.pixels_path, "width": self.width,
                "height": self.height, "fetched_at": self.fetched_at}

    @classmethod
    def from_json_dict(cls, data: dict) -> "ImageRecord":
        return cls(id=data["id"], source=data["source"], origin_uri=data["origin_uri"],
                   keyword=data["keyword"], pixels_path=data["pixels_path"],
                   width=int(data["width"]), height=int(data["height"]),
                   fetched_at=data["fetched_at"])


@dataclass
class CropRecord:
    """One detected object crop, tracked through staging and reclassification."""

    id: str
    parent_image: str
    bbox: tuple[int, int, int, int]
    detector_class: str
    detector_confidence: float
    space: str
    distance: Optional[float]

    def to_json_dict(self) -> dict:
        return {"kind": "crop", "id": self.id, "parent_image": self.parent_image,
                "bbox": list(self.bbox), "detector_class": self.detector_class,
                "detector_confidence": self.detector_confidence,
                "space": self.space, "distance": self.distance}

    @classmethod
    def from_json_dict(cls, data: dict) -> "CropRecord":
        return cls(id=data["id"], parent_image=data["parent_image"],
                   bbox=tuple(int(v) for v in data["bbox"]),
                   detector_class=data["detector_class"],
                   detector_confidence=float(data["detector_confidence"]),
                   space=data["space"],
                   distance=None if data["distance"] is None else float(data["distance"]))


@dataclass(frozen=True)
class DistanceScore:
    """Euclidean distance of one crop embedding to one class anchor embedding."""

    crop_id: str
    class_name: str
    distance: float


@dataclass
class AnchorSet:
    """One anchor image path per class."""

    entries: dict[str, str]

    @property
    def class_count(self) -> int:
        return len(self.entries)

    def to_json_dict(self) -> dict:
        return {"entries": dict(sorted(self.entries.items())),
                "class_count": self.class_count}


@dataclass
class ClassSpace:
    """Current keyword/non-keyword membership for one class."""

    class_name: str
    keyword_members: set[str]
    non_keyword_members: set[str]


@dataclass
class ImportReport:
    """Outcome of a directory import: stored records plus skipped files."""

    records: list[ImageRecord]
    skipped: list[tuple[str, str]]


class Catalog:
    """Single-writer catalog handle over one root directory.

    ``classes`` fixes the accepted detector vocabulary; when omitted the
    vocabulary grows with registered anchors and imported keywords.
    """

    def __init__(self, root, classes: Optional[Iterable[str]] = None):
        # Resolved eagerly: derived paths must survive cwd changes and
        # file URIs require absolute paths.
        self.root = Path(root).expanduser().resolve()
        self._lock = threading.RLock()
        self._bulk_depth = 0
        self._dirty = False
        self._images: dict[str, ImageRecord] = {}
        self._crops: dict[str, CropRecord] = {}
        self._anchors: dict[str, str] = {}
        self._anchor_meta: dict[str, dict] = {}
        self._configured_classes = set(classes) if classes else None
        for sub in ("images", "crops", "anchors", "profiles", "reports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._load()

    # -- persistence ------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.jsonl"

    def _load(self):
        if self.manifest_path.exists():
            with open(self.manifest_path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    data = json.loads(line)
                    if data.get("kind") == "image":
                        record = ImageRecord.from_json_dict(data)
                        self._images[record.id] = record
                    elif data.get("kind") == "crop":
                        record = CropRecord.from_json_dict(data)
                        self._crops[record.id] = record
                    else:
                        raise IngestionError(f"unknown manifest record kind: {data.get('kind')!r}")
        anchors_path = self.root / "anchors" / "anchors.json"
        if anchors_path.exists():
            self._anchors = json.loads(anchors_path.read_text())["entries"]
        meta_path = self.root / "anchors" / "anchor_meta.json"
        if meta_path.exists():
            self._anchor_meta = json.loads(meta_path.read_text())

    def _atomic_write(self, path: Path, text: str):
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)

    def _flush(self):
        if self._bulk_depth > 0:
            self._dirty = True
            return
        lines = [json.dumps(r.to_json_dict()) for r in self._images.values()]
        lines += [json.dumps(r.to_json_dict()) for r in self._crops.values()]
        self._atomic_write(self.manifest_path, "\n".join(lines) + ("\n" if lines else ""))
        self._dirty = False

    def _flush_anchors(self):
        if self._bulk_depth > 0:
            self._dirty = True
            return
        self._atomic_write(self.root / "anchors" / "anchors.json",
                           json.dumps(self.anchor_set().to_json_dict(), indent=2))
        self._atomic_write(self.root / "anchors" / "anchor_meta.json",
                           json.dumps(self._anchor_meta, indent=2, sort_keys=True))

    @contextmanager
    def bulk(self):
        """Batch many mutations into a single manifest flush."""
        with self._lock:
            self._bulk_depth += 1
            try:
                yield self
            finally:
                self._bulk_depth -= 1
                if self._bulk_depth == 0 and self._dirty:
                    self._flush()
                    self._flush_anchors()

    # -- images -----------------------------------------------------------

    def images(self) -> list[ImageRecord]:
        with self._lock:
            return list(self._images.values())

    def get_image(self, image_id: str) -> ImageRecord:
        with self._lock:
            if image_id not in self._images:
                raise NotFoundError(f"unknown image id: {image_id}")
            return self._images[image_id]

    def image_file(self, image_id: str) -> Path:
        return self.root / self.get_image(image_id).pixels_path

    def _store_image(self, content: bytes, image_id: str, source: str,
                     origin_uri: str, keyword: str) -> ImageRecord:
        try:
            with Image.open(io.BytesIO(content)) as img:
                width, height = img.size
                fmt = (img.format or "PNG").lower()
        except (UnidentifiedImageError, OSError) as exc:
            raise IngestionError(f"undecodable image from {origin_uri}: {exc}")
        ext = {"jpeg": ".jpg"}.get(fmt, f".{fmt}")
        rel = f"images/{image_id}{ext}"
        with self._lock:
            if image_id in self._images:
                return self._images[image_id]
            (self.root / rel).write_bytes(content)
            record = ImageRecord(id=image_id, source=source, origin_uri=origin_uri,
                                 keyword=keyword, pixels_path=rel, width=width,
                                 height=height, fetched_at=_now())
            self._images[image_id] = record
            self._flush()
            return record

    def add_crawled_image(self, content: bytes, origin_uri: str, keyword: str) -> ImageRecord:
        """Store bytes fetched by the crawler; identical content maps to one record."""
        return self._store_image(content, _sha1(content), "crawl", origin_uri, keyword)

    def import_directory(self, directory, keyword: str) -> ImportReport:
        """Import every decodable image file under ``directory`` (non-recursive).

        Files are processed in lexicographic name order; undecodable
        files are skipped and reported, not fatal.
        """
        directory = Path(directory).expanduser().resolve()
        if not directory.is_dir():
            raise IngestionError(f"import root does not exist: {directory}")
        records: list[ImageRecord] = []
        skipped: list[tuple[str, str]] = []
        with self.bulk():
            for path in sorted(p for p in directory.iterdir() if p.is_file()):
                content = path.read_bytes()
                image_id = _sha1(content, path.name.encode())
                try:
                    records.append(self._store_image(
                        content, image_id, "local-import", path.as_uri(), keyword))
                except IngestionError as exc:
                    skipped.append((path.name, str(exc)))
        return ImportReport(records=records, skipped=skipped)

    # -- crops ------------------------------------------------------------

    def crops(self) -> list[CropRecord]:
        with self._lock:
            return list(self._crops.values())

    def get_crop(self, crop_id: str) -> CropRecord:
        with self._lock:
            if crop_id not in self._crops:
                raise NotFoundError(f"unknown crop id: {crop_id}")
            return self._crops[crop_id]

    def crop_class(self, crop: CropRecord) -> str:
        """Class space a crop belongs to: the keyword of its parent image."""
        return self.get_image(crop.parent_image).keyword

    def crop_file(self, crop_id: str) -> Path:
        crop = self.get_crop(crop_id)
        return self.root / "crops" / self.crop_class(crop) / crop.space / f"{crop.id}.png"

    def known_classes(self) -> list[str]:
        with self._lock:
            known = set(self._anchors)
            known.update(img.keyword for img in self._images.values())
            if self._configured_classes:
                known.update(self._configured_classes)
            return sorted(known)

    def _check_class(self, class_name: str):
        if class_name not in self.known_classes():
            raise NotFoundError(f"unknown class: {class_name}")

    def save_crop(self, parent: ImageRecord, bbox: Sequence[float],
                  detector_class: str, confidence: float) -> CropRecord:
        """Extract, persist, and track one detector box from a parent image."""
        if not 0.0 <= confidence <= 1.0:
            raise RejectionError(f"confidence must be in [0,1], got {confidence}")
        vocabulary = self._configured_classes or set(self._anchors) or None
        if vocabulary is not None and detector_class not in vocabulary:
            raise RejectionError(f"unknown detector class: {detector_class}")
        parent = self.get_image(parent.id)
        clamped = clamp_bbox(bbox, parent.width, parent.height)
        crop_id = _sha1(parent.id.encode(),
                        repr(clamped).encode(),
                        detector_class.encode(),
                        f"{confidence:.6f}".encode())
        with self._lock:
            if crop_id in self._crops:
                return self._crops[crop_id]
            record = CropRecord(id=crop_id, parent_image=parent.id, bbox=clamped,
                                detector_class=detector_class,
                                detector_confidence=float(confidence),
                                space="unassigned", distance=None)
            with Image.open(self.root / parent.pixels_path) as img:
                pixels = img.convert("RGB").crop(clamped)
            dest = self.root / "crops" / parent.keyword / record.space / f"{crop_id}.png"
            dest.parent.mkdir(parents=True, exist_ok=True)
            pixels.save(dest, format="PNG")
            self._crops[crop_id] = record
            self._flush()
            return record

    def assign_space(self, crop_id: str, space: str) -> CropRecord:
        """Move a crop between the keyword and non-keyword spaces of its class."""
        if space not in ASSIGNABLE_SPACES:
            raise ValidationError(f"space must be one of {ASSIGNABLE_SPACES}, got {space!r}")
        with self._lock:
            crop = self.get_crop(crop_id)
            if crop.space == space:
                return crop
            old_path = self.crop_file(crop_id)
            updated = replace(crop, space=space)
            self._crops[crop_id] = updated
            new_path = self.crop_file(crop_id)
            new_path.parent.mkdir(parents=True, exist_ok=True)
            if old_path.exists():
                os.replace(old_path, new_path)
            self._flush()
            return updated

    def set_distance(self, crop_id: str, distance: float) -> CropRecord:
        with self._lock:
            crop = self.get_crop(crop_id)
            updated = replace(crop, distance=float(distance))
            self._crops[crop_id] = updated
            self._flush()
            return updated

    def class_space(self, class_name: str) -> ClassSpace:
        with self._lock:
            self._check_class(class_name)
            keyword, non_keyword = set(), set()
            for crop in self._crops.values():
                if self.crop_class(crop) != class_name:
                    continue
                if crop.space == "keyword":
                    keyword.add(crop.id)
                elif crop.space == "non-keyword":
                    non_keyword.add(crop.id)
            return ClassSpace(class_name=class_name,
                              keyword_members=keyword,
                              non_keyword_members=non_keyword)

    def query(self, space: str, class_name: str, limit: int, offset: int = 0
              ) -> tuple[list[CropRecord], int]:
        """Page through a class space, distance ascending (unscored last), then id."""
        if limit < 1:
            raise ValidationError(f"limit must be >= 1, got {limit}")
        if offset < 0:
            raise ValidationError(f"offset must be >= 0, got {offset}")
        if space not in SPACES:
            raise ValidationError(f"space must be one of {SPACES}, got {space!r}")
        with self._lock:
            self._check_class(class_name)
            members = [c for c in self._crops.values()
                       if c.space == space and self.crop_class(c) == class_name]
            members.sort(key=lambda c: (c.distance is None, c.distance or 0.0, c.id))
            return members[offset:offset + limit], len(members)

    # -- anchors ----------------------------------------------------------

    def anchor_set(self) -> AnchorSet:
        with self._lock:
            return AnchorSet(entries=dict(self._anchors))

    def anchor_file(self, class_name: str) -> Path:
        with self._lock:
            if class_name not in self._anchors:
                raise NotFoundError(f"no anchor registered for class: {class_name}")
            return self.root / self._anchors[class_name]

    def anchor_sha(self, class_name: str) -> str:
        with self._lock:
            if class_name not in self._anchor_meta:
                raise NotFoundError(f"no anchor registered for class: {class_name}")
            return self._anchor_meta[class_name]["sha"]

    def set_anchor(self, class_name: str, content: bytes) -> Path:
        """Register or replace the single anchor image for a class.

        Replacement marks any existing profile for the class stale until
        recalibration records the new anchor hash.
        """
        if not class_name or not class_name.strip():
            raise ValidationError("class name must be non-blank")
        try:
            with Image.open(io.BytesIO(content)) as img:
                fmt = (img.format or "PNG").lower()
                img.load()
        except (UnidentifiedImageError, OSError) as exc:
            raise IngestionError(f"undecodable anchor image: {exc}")
        ext = {"jpeg": ".jpg"}.get(fmt, f".{fmt}")
        rel = f"anchors/{class_name}{ext}"
        with self._lock:
            old = self._anchors.get(class_name)
            if old and old != rel:
                (self.root / old).unlink(missing_ok=True)
            (self.root / rel).write_bytes(content)
            self._anchors[class_name] = rel
            meta = self._anchor_meta.setdefault(class_name, {})
            meta["sha"] = _sha1(content)
            meta["updated_at"] = _now()
            self._flush_anchors()
            return self.root / rel

    # -- profiles ---------------------------------------------------------

    def profile_path(self, class_name: str) -> Path:
        return self.root / "profiles" / f"{class_name}.json"

    def save_profile(self, profile) -> Path:
        """Persist a threshold profile and bind it to the current anchor hash."""
        path = self.profile_path(profile.class_name)
        with self._lock:
            self._atomic_write(path, json.dumps(profile.to_json_dict(), indent=2))
            if profile.class_name in self._anchor_meta:
                meta = self._anchor_meta[profile.class_name]
                meta["profile_sha"] = meta["sha"]
                self._flush_anchors()
        return path

    def load_profile(self, class_name: str):
        from .calibrator import ThresholdProfile

        path = self.profile_path(class_name)
        if not path.exists():
            raise NotFoundError(f"no calibrated profile for class: {class_name}")
        return ThresholdProfile.from_json_dict(json.loads(path.read_text()))

    def has_profile(self, class_name: str) -> bool:
        return self.profile_path(class_name).exists()

    def is_profile_stale(self, class_name: str) -> bool:
        """True when the class anchor changed after its profile was calibrated."""
        with self._lock:
            if not self.has_profile(class_name):
                return False
            meta = self._anchor_meta.get(class_name)
            if not meta:
                return False
            return meta.get("profile_sha") != meta["sha"]

    # -- reports ----------------------------------------------------------

    def save_report(self, name: str, payload: dict) -> Path:
        path = self.root / "reports" / f"{name}.json"
        self._atomic_write(path, json.dumps(payload, indent=2))
        return path

    def load_report(self, name: str) -> dict:
        path = self.root / "reports" / f"{name}.json"
        if not path.exists():
            raise NotFoundError(f"no report named: {name}")
        return json.loads(path.read_text())
