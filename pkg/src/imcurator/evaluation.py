"""Desk-scale experiment harness over the synthetic shape corpus.

Ties the pipeline stages together for offline runs: ingest an annotated
image tree, train the embedder on trusted labels, calibrate per-class
thresholds on a validation split, then score the competing curation
methods side by side on a held-out test split. The service CLI's train,
calibrate, and evaluate commands are thin wrappers over these helpers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from PIL import Image

from . import synthetic
from .calibrator import LabeledDistance, ThresholdProfile, build_profile
from .catalog import Catalog, CropRecord, ImageRecord
from .detector import AnnotationOracleBackend, DetectorBackend, NoisyDetectorBackend
from .errors import ConfigurationError
from .metrics import ComparisonReport, compare_methods
from .reclassifier import decide
from .siamese import ContrastiveEmbedder, PairSample, sample_pairs, score_crops

METHOD_DETECTOR = "detector-only"
METHOD_CLASSIFIER = "detector+classifier"
METHOD_SIAMESE = "detector+siamese"
METHODS = (METHOD_DETECTOR, METHOD_CLASSIFIER, METHOD_SIAMESE)

COMPARE_REPORT_NAME = "compare"


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for one corpus-to-report run; defaults fit a CPU desk run."""

    images_per_class: int = 100
    flip_rate: float = 0.10
    seed: int = 0
    backbone: str = "tiny-test"
    embedding_dim: int = 32
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    negative_ratio: float = 1.0
    pretrained: bool = False
    level: int = 3
    clutter: bool = False
    crop_inputs: bool = True
    train_fraction: float = 0.6
    val_fraction: float = 0.2

    def __post_init__(self):
        if not 0 < self.train_fraction < 1 or not 0 < self.val_fraction < 1:
            raise ConfigurationError("split fractions must sit strictly inside (0, 1)")
        if self.train_fraction + self.val_fraction >= 1:
            raise ConfigurationError("train and val fractions must leave room for a test split")


@dataclass
class CorpusSplits:
    """Crops grouped by split, plus the trusted class of every crop."""

    train: list[CropRecord]
    val: list[CropRecord]
    test: list[CropRecord]
    truth: dict[str, str]

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.truth.values()))


@dataclass
class ExperimentResult:
    """Everything a run produced, ready for persistence or assertions."""

    config: ExperimentConfig
    splits: CorpusSplits
    embedder: ContrastiveEmbedder
    profiles: dict[str, ThresholdProfile]
    report: ComparisonReport


def make_backend(classes: Sequence[str], flip_rate: float = 0.0,
                 seed: int = 0) -> DetectorBackend:
    """Annotation oracle over the given vocabulary, noisy when asked."""
    oracle = AnnotationOracleBackend(vocabulary=tuple(classes))
    if flip_rate > 0:
        return NoisyDetectorBackend(oracle, flip_rate=flip_rate, seed=seed)
    return oracle


def ensure_anchors(catalog: Catalog, classes: Sequence[str], seed: int = 0) -> None:
    """Give every class a rendered anchor image unless one is already set."""
    present = catalog.anchor_set().entries
    for class_name in classes:
        if class_name not in present:
            catalog.set_anchor(class_name, synthetic.make_anchor_image(class_name, seed))


def import_corpus(catalog: Catalog, corpus_root) -> list[ImageRecord]:
    """Import every class subdirectory of an annotated tree under its own keyword."""
    corpus_root = Path(corpus_root)
    class_dirs = sorted(p for p in corpus_root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ConfigurationError(f"no class subdirectories under {corpus_root}")
    records: list[ImageRecord] = []
    for class_dir in class_dirs:
        report = catalog.import_directory(class_dir, keyword=class_dir.name)
        records.extend(report.records)
    return records


def split_images(images: Sequence[ImageRecord], train_fraction: float,
                 val_fraction: float) -> tuple[list[ImageRecord], list[ImageRecord], list[ImageRecord]]:
    """Per-class deterministic split by origin path, so reruns agree."""
    by_class: dict[str, list[ImageRecord]] = {}
    for record in images:
        by_class.setdefault(record.keyword, []).append(record)
    train: list[ImageRecord] = []
    val: list[ImageRecord] = []
    test: list[ImageRecord] = []
    for class_name in sorted(by_class):
        members = sorted(by_class[class_name], key=lambda r: r.origin_uri)
        n_train = round(len(members) * train_fraction)
        n_val = round(len(members) * val_fraction)
        if n_train == 0 or n_val == 0 or n_train + n_val >= len(members):
            raise ConfigurationError(
                f"class {class_name} has too few images ({len(members)}) for the requested splits")
        train.extend(members[:n_train])
        val.extend(members[n_train:n_train + n_val])
        test.extend(members[n_train + n_val:])
    return train, val, test


def detect_and_crop(catalog: Catalog, backend: DetectorBackend,
                    images: Sequence[ImageRecord],
                    crop_inputs: bool = True) -> list[CropRecord]:
    """Run the detector and persist one crop per detection.

    With crop_inputs off the detector label noise still applies, but the
    stored region spans the whole frame, which is the no-crop baseline.
    """
    crops: list[CropRecord] = []
    with catalog.bulk():
        for record in images:
            for detection in backend.detect(record, catalog.image_file(record.id)):
                bbox = detection.bbox if crop_inputs else (0, 0, record.width, record.height)
                crops.append(catalog.save_crop(record, bbox, detection.class_name,
                                               detection.confidence))
    return crops


def build_splits(catalog: Catalog, backend: DetectorBackend,
                 images: Sequence[ImageRecord], config: ExperimentConfig) -> CorpusSplits:
    """Split images per class, then materialize crops with trusted labels."""
    train_images, val_images, test_images = split_images(
        images, config.train_fraction, config.val_fraction)
    splits = []
    truth: dict[str, str] = {}
    for members in (train_images, val_images, test_images):
        crops = detect_and_crop(catalog, backend, members, crop_inputs=config.crop_inputs)
        for crop in crops:
            truth[crop.id] = catalog.crop_class(crop)
        splits.append(crops)
    return CorpusSplits(train=splits[0], val=splits[1], test=splits[2], truth=truth)


def _crop_image(catalog: Catalog, crop: CropRecord) -> Image.Image:
    with Image.open(catalog.crop_file(crop.id)) as image:
        return image.convert("RGB")


def _anchor_images(catalog: Catalog, classes: Sequence[str]) -> dict[str, Image.Image]:
    anchors: dict[str, Image.Image] = {}
    for class_name in classes:
        with Image.open(catalog.anchor_file(class_name)) as image:
            anchors[class_name] = image.convert("RGB")
    return anchors


def pairs_for(catalog: Catalog, crops: Sequence[CropRecord], truth: dict[str, str],
              negative_ratio: float, seed: int) -> list[PairSample]:
    """Anchor-crop pairs from trusted labels, ready for the train loop."""
    classes = sorted(set(truth[crop.id] for crop in crops))
    anchors = _anchor_images(catalog, classes)
    items = [(truth[crop.id], _crop_image(catalog, crop)) for crop in crops]
    return sample_pairs(items, anchors, negative_ratio=negative_ratio, seed=seed)


def fit_embedder(catalog: Catalog, splits: CorpusSplits,
                 config: ExperimentConfig) -> ContrastiveEmbedder:
    """Train on the train split, select the epoch on the validation split."""
    embedder = ContrastiveEmbedder(
        backbone=config.backbone,
        embedding_dim=config.embedding_dim,
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        batch_size=config.batch_size,
        seed=config.seed,
        negative_ratio=config.negative_ratio,
        pretrained=config.pretrained,
    )
    train_pairs = pairs_for(catalog, splits.train, splits.truth,
                            config.negative_ratio, config.seed)
    # Distinct seed so validation negatives are not the train pattern replayed.
    val_pairs = pairs_for(catalog, splits.val, splits.truth,
                          config.negative_ratio, config.seed + 1)
    return embedder.fit(train_pairs, val_pairs)


def calibrate_classes(catalog: Catalog, embedder: ContrastiveEmbedder,
                      crops: Sequence[CropRecord], truth: dict[str, str],
                      classes: Optional[Sequence[str]] = None) -> dict[str, ThresholdProfile]:
    """Build and persist one threshold profile per class from labeled distances."""
    class_list = list(classes) if classes is not None else sorted(set(truth.values()))
    profiles: dict[str, ThresholdProfile] = {}
    for class_name in class_list:
        scores = score_crops(catalog, embedder, crops, against=class_name)
        samples = [LabeledDistance(s.distance, truth[s.crop_id] == class_name)
                   for s in scores]
        profile = build_profile(class_name, samples)
        catalog.save_profile(profile)
        profiles[class_name] = profile
    return profiles


def compare_on_test(catalog: Catalog, embedder: ContrastiveEmbedder,
                    crops: Sequence[CropRecord], truth: dict[str, str],
                    profiles: dict[str, ThresholdProfile],
                    level: int = 3) -> ComparisonReport:
    """Score the three curation methods one-vs-rest over a shared crop universe.

    Every crop is judged once per class: the detector method keeps its
    own label, the classifier method keeps the nearest anchor's class,
    and the reclassifier method thresholds the per-class distance.
    """
    classes = sorted(profiles)
    distances = {
        class_name: {s.crop_id: s.distance
                     for s in score_crops(catalog, embedder, crops, against=class_name)}
        for class_name in classes
    }
    nearest = {
        crop.id: min(classes, key=lambda c: (distances[c][crop.id], c))
        for crop in crops
    }
    actual: dict[str, bool] = {}
    class_of: dict[str, str] = {}
    predictions: dict[str, dict[str, bool]] = {method: {} for method in METHODS}
    for class_name in classes:
        threshold = profiles[class_name].threshold_for(level)
        for crop in crops:
            key = f"{class_name}:{crop.id}"
            class_of[key] = class_name
            actual[key] = truth[crop.id] == class_name
            prior_is_keyword = crop.detector_class == class_name
            predictions[METHOD_DETECTOR][key] = prior_is_keyword
            predictions[METHOD_CLASSIFIER][key] = nearest[crop.id] == class_name
            prior = "keyword" if prior_is_keyword else "non-keyword"
            final = decide(prior, distances[class_name][crop.id], threshold)
            predictions[METHOD_SIAMESE][key] = final == "keyword"
    return compare_methods(predictions, actual, class_of, classes=classes)


def ensure_corpus(corpus_root, config: ExperimentConfig) -> Path:
    """Generate the synthetic tree when the corpus directory is absent or empty."""
    corpus_root = Path(corpus_root)
    if not corpus_root.exists() or not any(corpus_root.iterdir()):
        synthetic.generate_fixture_tree(corpus_root, config.images_per_class,
                                        seed=config.seed, clutter=config.clutter)
    return corpus_root


def run_experiment(catalog: Catalog, corpus_root,
                   config: ExperimentConfig = ExperimentConfig()) -> ExperimentResult:
    """Full corpus-to-report run; generates the corpus tree when absent."""
    corpus_root = ensure_corpus(corpus_root, config)
    images = import_corpus(catalog, corpus_root)
    classes = sorted(set(record.keyword for record in images))
    backend = make_backend(classes, flip_rate=config.flip_rate, seed=config.seed)
    ensure_anchors(catalog, classes, seed=config.seed)
    splits = build_splits(catalog, backend, images, config)
    embedder = fit_embedder(catalog, splits, config)
    profiles = calibrate_classes(catalog, embedder, splits.val, splits.truth, classes)
    report = compare_on_test(catalog, embedder, splits.test, splits.truth,
                             profiles, level=config.level)
    catalog.save_report(COMPARE_REPORT_NAME, report.heatmap())
    return ExperimentResult(config=config, splits=splits, embedder=embedder,
                            profiles=profiles, report=report)
