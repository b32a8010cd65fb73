"""Command line contract: exit codes, artifacts, and diagnostics."""

import json

import pytest

from imcurator.catalog import Catalog
from imcurator.service.cli import main
from imcurator.siamese import ContrastiveEmbedder
from imcurator.synthetic import CLASSES


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """Catalog primed by the train and calibrate commands."""
    root = tmp_path_factory.mktemp("cli") / "catalog"
    args = ["--catalog", str(root), "--images-per-class", "8",
            "--seed", "0"]
    assert main(["train", *args, "--epochs", "1", "--backbone", "tiny-test"]) == 0
    assert main(["calibrate", *args]) == 0
    return root


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["conjure"])
    assert excinfo.value.code == 2


def test_missing_command_is_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2


def test_missing_catalog_and_config_fails_with_diagnostic(capsys):
    assert main(["train"]) == 1
    assert "--catalog" in capsys.readouterr().err


def test_missing_config_file_names_the_path(tmp_path, capsys):
    path = tmp_path / "absent.json"
    assert main(["train", "--config", str(path)]) == 1
    assert str(path) in capsys.readouterr().err


def test_train_writes_checkpoint_with_config_echo(trained):
    checkpoint = trained / "embedder.pt"
    assert checkpoint.exists()
    assert checkpoint.with_suffix(".history.csv").exists()
    restored = ContrastiveEmbedder.load(checkpoint)
    params = restored.get_params()
    assert params["epochs"] == 1
    assert params["backbone"] == "tiny-test"


def test_calibrate_writes_profiles(trained):
    catalog = Catalog(trained)
    for class_name in CLASSES:
        assert catalog.has_profile(class_name)


def test_calibrate_without_checkpoint_fails(tmp_path, capsys):
    assert main(["calibrate", "--catalog", str(tmp_path / "none"),
                 "--images-per-class", "8"]) == 1
    assert "checkpoint" in capsys.readouterr().err


def test_curate_runs_one_job(trained, capsys):
    assert main(["curate", "--catalog", str(trained), "--keyword", "circle",
                 "--count", "4", "--level", "2"]) == 0
    out = capsys.readouterr().out
    assert "done" in out


def test_curate_unknown_keyword_fails(trained, capsys):
    assert main(["curate", "--catalog", str(trained), "--keyword", "zeppelin"]) == 1
    assert "zeppelin" in capsys.readouterr().err


def test_evaluate_writes_csv_report(tmp_path, capsys):
    root = tmp_path / "catalog"
    out = tmp_path / "compare.csv"
    assert main(["evaluate", "--catalog", str(root), "--images-per-class", "8",
                 "--epochs", "1", "--seed", "1", "--out", str(out)]) == 0
    assert out.exists()
    header = out.read_text().splitlines()[0]
    assert header.startswith("class,")
    assert "detector-only/f1" in header
    assert Catalog(root).load_report("compare")["methods"] == [
        "detector-only", "detector+classifier", "detector+siamese"]
    assert "report written" in capsys.readouterr().out


def test_config_file_drives_the_commands(tmp_path):
    root = tmp_path / "catalog"
    config_path = tmp_path / "service.json"
    config_path.write_text(json.dumps({
        "catalog_root": str(root),
        "fixture_root": str(root / "fixtures"),
        "embedder_path": str(root / "embedder.pt"),
        "classes": list(CLASSES),
    }))
    args = ["--config", str(config_path), "--images-per-class", "8", "--seed", "2"]
    assert main(["train", *args, "--epochs", "1"]) == 0
    assert main(["calibrate", *args]) == 0
    assert main(["curate", "--config", str(config_path), "--keyword", "square",
                 "--count", "3"]) == 0
