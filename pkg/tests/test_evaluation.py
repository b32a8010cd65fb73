"""Experiment harness: splits, anchors, calibration, and the method comparison."""

import pytest

from imcurator.catalog import Catalog
from imcurator.detector import AnnotationOracleBackend, NoisyDetectorBackend
from imcurator.errors import ConfigurationError
from imcurator.evaluation import (
    METHODS,
    ExperimentConfig,
    ensure_anchors,
    import_corpus,
    make_backend,
    run_experiment,
    split_images,
)
from imcurator.synthetic import CLASSES, generate_fixture_tree


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("experiment")
    catalog = Catalog(tmp / "catalog")
    config = ExperimentConfig(images_per_class=12, epochs=2, flip_rate=0.25, seed=3)
    result = run_experiment(catalog, tmp / "corpus", config)
    return catalog, result


def test_config_rejects_bad_split_fractions():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(train_fraction=0.0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(train_fraction=0.7, val_fraction=0.3)


def test_make_backend_is_noisy_only_when_asked():
    assert isinstance(make_backend(CLASSES, flip_rate=0.0), AnnotationOracleBackend)
    noisy = make_backend(CLASSES, flip_rate=0.2, seed=1)
    assert isinstance(noisy, NoisyDetectorBackend)
    assert tuple(noisy.vocabulary) == CLASSES


def test_import_corpus_requires_class_directories(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(ConfigurationError):
        import_corpus(Catalog(tmp_path / "catalog"), empty)


def test_import_corpus_keywords_follow_directories(tmp_path):
    generate_fixture_tree(tmp_path / "corpus", per_class=2, seed=0)
    records = import_corpus(Catalog(tmp_path / "catalog"), tmp_path / "corpus")
    assert sorted(set(r.keyword for r in records)) == sorted(CLASSES)
    assert len(records) == 2 * len(CLASSES)


def test_split_images_rejects_tiny_classes(tmp_path):
    generate_fixture_tree(tmp_path / "corpus", per_class=2, seed=0)
    records = import_corpus(Catalog(tmp_path / "catalog"), tmp_path / "corpus")
    with pytest.raises(ConfigurationError):
        split_images(records, 0.6, 0.2)


def test_splits_are_per_class_and_disjoint(experiment):
    _, result = experiment
    splits = result.splits
    # 12 images per class at 0.6/0.2 -> 7 train, 2 val, 3 test each.
    assert len(splits.train) == 14 and len(splits.val) == 4 and len(splits.test) == 6
    ids = [c.id for c in splits.train + splits.val + splits.test]
    assert len(ids) == len(set(ids))
    for split in (splits.train, splits.val, splits.test):
        labels = sorted(set(splits.truth[c.id] for c in split))
        assert labels == sorted(CLASSES)


def test_truth_matches_parent_keyword(experiment):
    catalog, result = experiment
    for crop in result.splits.test:
        assert result.splits.truth[crop.id] == catalog.crop_class(crop)


def test_planted_noise_shows_up_in_detector_labels(experiment):
    _, result = experiment
    splits = result.splits
    crops = splits.train + splits.val + splits.test
    flipped = sum(1 for c in crops if c.detector_class != splits.truth[c.id])
    assert 0 < flipped < len(crops)


def test_ensure_anchors_is_idempotent(experiment):
    catalog, _ = experiment
    before = {name: catalog.anchor_sha(name) for name in CLASSES}
    ensure_anchors(catalog, CLASSES, seed=99)
    assert {name: catalog.anchor_sha(name) for name in CLASSES} == before


def test_profiles_are_persisted(experiment):
    catalog, result = experiment
    for class_name in CLASSES:
        assert catalog.has_profile(class_name)
        stored = catalog.load_profile(class_name)
        assert stored.to_json_dict() == result.profiles[class_name].to_json_dict()


def test_comparison_covers_all_methods_and_classes(experiment):
    _, result = experiment
    report = result.report
    assert report.methods == list(METHODS)
    assert report.classes == sorted(CLASSES)
    for class_name in report.classes:
        for method in report.methods:
            value = report.cell(class_name, method)
            assert value is None or 0.0 <= value <= 1.0


def test_compare_report_is_saved(experiment):
    catalog, result = experiment
    assert catalog.load_report("compare") == result.report.heatmap()


def test_whole_frame_mode_stores_full_frames(tmp_path):
    catalog = Catalog(tmp_path / "catalog")
    generate_fixture_tree(tmp_path / "corpus", per_class=3, seed=1)
    config = ExperimentConfig(images_per_class=3, crop_inputs=False, flip_rate=0.0,
                              train_fraction=0.4, val_fraction=0.3, epochs=1)
    images = import_corpus(catalog, tmp_path / "corpus")
    from imcurator.evaluation import detect_and_crop

    crops = detect_and_crop(catalog, make_backend(CLASSES), images, crop_inputs=False)
    for crop in crops:
        parent = catalog.get_image(crop.parent_image)
        assert crop.bbox == (0, 0, parent.width, parent.height)
