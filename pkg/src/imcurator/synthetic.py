"""Deterministic two-class synthetic corpus: warm circles vs cool squares.

Every image holds one labeled main shape and a truthful annotation
sidecar, so the oracle detector backend and end-to-end pipeline runs
need no real dataset or network. Color separates the classes (circles
draw from warm reds, squares from cool blues), which a small embedder
can learn in a few CPU epochs. Optional clutter draws unannotated
distractor shapes from both class palettes, which makes whole-image
matching much harder than matching the annotated crop.
"""

from __future__ import annotations

import hashlib
import io
import random
from pathlib import Path

from PIL import Image, ImageDraw

from .errors import ConfigurationError

CLASSES = ("circle", "square")
IMAGE_SIZE = (160, 120)


def _rng(*parts) -> random.Random:
    """Process-independent RNG: hash() seeding varies with PYTHONHASHSEED."""
    digest = hashlib.sha1(":".join(str(p) for p in parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _class_color(class_name: str, rng: random.Random) -> tuple[int, int, int]:
    if class_name == "circle":
        return (rng.randint(150, 255), rng.randint(30, 120), rng.randint(30, 120))
    if class_name == "square":
        return (rng.randint(30, 120), rng.randint(30, 120), rng.randint(150, 255))
    raise ConfigurationError(f"unknown synthetic class: {class_name}")


def _draw_shape(draw: ImageDraw.ImageDraw, class_name: str,
                bbox: tuple[int, int, int, int], color: tuple[int, int, int]):
    if class_name == "circle":
        draw.ellipse(bbox, fill=color)
    else:
        draw.rectangle(bbox, fill=color)


def _random_bbox(rng: random.Random, size_range=(40, 70)) -> tuple[int, int, int, int]:
    width, height = IMAGE_SIZE
    side = rng.randint(*size_range)
    x0 = rng.randint(0, width - side)
    y0 = rng.randint(0, height - side)
    return (x0, y0, x0 + side, y0 + side)


def make_image(class_name: str, seed: int, index: int, clutter: bool = False
               ) -> tuple[Image.Image, tuple[int, int, int, int]]:
    """One synthetic image plus the main shape's tight bbox."""
    if class_name not in CLASSES:
        raise ConfigurationError(f"unknown synthetic class: {class_name}")
    rng = _rng(seed, index, class_name)
    background = tuple(rng.randint(170, 230) for _ in range(3))
    # Main shape parameters come first so annotations are clutter-invariant.
    bbox = _random_bbox(rng)
    color = _class_color(class_name, rng)
    image = Image.new("RGB", IMAGE_SIZE, background)
    draw = ImageDraw.Draw(image)
    if clutter:
        # Distractors borrow both class shapes and palettes at main-shape
        # scale, so whole-frame matching is ambiguous while the annotated
        # crop stays clean: the main shape is always drawn on top.
        clutter_rng = _rng(seed, index, class_name, "clutter")
        for _ in range(clutter_rng.randint(5, 8)):
            noise_class = clutter_rng.choice(CLASSES)
            noise_bbox = _random_bbox(clutter_rng, size_range=(30, 80))
            _draw_shape(draw, noise_class, noise_bbox,
                        _class_color(noise_class, clutter_rng))
    _draw_shape(draw, class_name, bbox, color)
    return image, bbox


def make_anchor_image(class_name: str, seed: int = 0) -> bytes:
    """Canonical clutter-free anchor: one centered shape, PNG bytes."""
    rng = _rng(seed, "anchor", class_name)
    image = Image.new("RGB", IMAGE_SIZE, (200, 200, 200))
    width, height = IMAGE_SIZE
    side = 64
    x0, y0 = (width - side) // 2, (height - side) // 2
    _draw_shape(ImageDraw.Draw(image), class_name,
                (x0, y0, x0 + side, y0 + side), _class_color(class_name, rng))
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def make_blank_image(seed: int = 0) -> Image.Image:
    """Uniform canvas with no objects (pairs with an empty sidecar)."""
    rng = _rng(seed, "blank")
    return Image.new("RGB", IMAGE_SIZE, tuple(rng.randint(170, 230) for _ in range(3)))


def generate_fixture_tree(root, per_class: int, seed: int = 0,
                          clutter: bool = False) -> dict[str, list[Path]]:
    """Write ``per_class`` annotated images into one subdirectory per class.

    The layout (root/<class>/img_NNNN.png plus sidecar) is what both the
    fixture search provider and per-keyword directory imports expect.
    """
    if per_class < 1:
        raise ConfigurationError(f"per_class must be >= 1, got {per_class}")
    root = Path(root)
    paths: dict[str, list[Path]] = {}
    for class_name in CLASSES:
        class_dir = root / class_name
        class_dir.mkdir(parents=True, exist_ok=True)
        paths[class_name] = []
        for index in range(per_class):
            image, bbox = make_image(class_name, seed, index, clutter=clutter)
            stem = f"img_{index:04d}"
            image_path = class_dir / f"{stem}.png"
            image.save(image_path, format="PNG")
            (class_dir / f"{stem}.txt").write_text(
                f"{class_name} {bbox[0]} {bbox[1]} {bbox[2]} {bbox[3]}\n")
            paths[class_name].append(image_path)
    return paths


def generate_corpus(root, count: int, seed: int = 0, clutter: bool = False) -> list[Path]:
    """Write ``count`` images with truthful sidecars; classes alternate round-robin.

    Files are img_0000.png / img_0000.txt and so on; the same (seed,
    count, clutter) always reproduces identical bytes.
    """
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for index in range(count):
        class_name = CLASSES[index % len(CLASSES)]
        image, bbox = make_image(class_name, seed, index, clutter=clutter)
        stem = f"img_{index:04d}"
        image_path = root / f"{stem}.png"
        image.save(image_path, format="PNG")
        (root / f"{stem}.txt").write_text(
            f"{class_name} {bbox[0]} {bbox[1]} {bbox[2]} {bbox[3]}\n")
        paths.append(image_path)
    return paths
