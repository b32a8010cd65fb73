"""Command line entry points: train, calibrate, curate, evaluate, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from ..catalog import Catalog
from ..errors import ConfigurationError, CurationError
from ..evaluation import (
    ExperimentConfig,
    build_splits,
    calibrate_classes,
    ensure_anchors,
    ensure_corpus,
    fit_embedder,
    import_corpus,
    make_backend,
    run_experiment,
)
from ..siamese import ContrastiveEmbedder, history_to_csv
from .config import ServiceConfig, load_config
from .jobs import build_runtime

BACKBONES = ("small", "large", "tiny-test")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imcurator",
        description="Curate web-crawled image sets with one-shot similarity scoring.")
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="JSON service config file")
    shared.add_argument("--catalog", type=Path, help="catalog root directory")
    shared.add_argument("--seed", type=int, help="experiment seed")

    corpus = argparse.ArgumentParser(add_help=False)
    corpus.add_argument("--corpus", type=Path,
                        help="annotated corpus tree, one subdirectory per class "
                             "(a synthetic one is generated when missing)")
    corpus.add_argument("--checkpoint", type=Path, help="embedder checkpoint path")
    corpus.add_argument("--images-per-class", type=int,
                        help="size of the generated synthetic corpus")

    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[shared, corpus],
                           help="train the embedder and write a checkpoint")
    train.add_argument("--backbone", choices=BACKBONES)
    train.add_argument("--epochs", type=int)
    train.set_defaults(handler=cmd_train)

    calibrate = sub.add_parser("calibrate", parents=[shared, corpus],
                               help="score a validation split and write threshold profiles")
    calibrate.set_defaults(handler=cmd_calibrate)

    curate = sub.add_parser("curate", parents=[shared],
                            help="run one curation job headlessly")
    curate.add_argument("--keyword", required=True)
    curate.add_argument("--count", type=int, default=10)
    curate.add_argument("--level", type=int, choices=range(1, 6))
    curate.add_argument("--provider")
    curate.set_defaults(handler=cmd_curate)

    evaluate = sub.add_parser("evaluate", parents=[shared, corpus],
                              help="run the method comparison and emit its report")
    evaluate.add_argument("--backbone", choices=BACKBONES)
    evaluate.add_argument("--epochs", type=int)
    evaluate.add_argument("--level", type=int, choices=range(1, 6))
    evaluate.add_argument("--flip-rate", type=float,
                          help="planted detector label noise rate")
    evaluate.add_argument("--out", type=Path, help="CSV report path")
    evaluate.set_defaults(handler=cmd_evaluate)

    serve = sub.add_parser("serve", parents=[shared],
                           help="start the HTTP service")
    serve.add_argument("--provider")
    serve.set_defaults(handler=cmd_serve)
    return parser


def _catalog_root(args) -> Path:
    if args.catalog is not None:
        return args.catalog
    if args.config is not None:
        return load_config(args.config).catalog_root
    raise ConfigurationError("either --catalog or --config is required")


def _experiment_config(args, **overrides) -> ExperimentConfig:
    for name, attr in (("seed", "seed"), ("epochs", "epochs"),
                       ("backbone", "backbone"),
                       ("images_per_class", "images_per_class"),
                       ("flip_rate", "flip_rate"), ("level", "level")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides.setdefault(name, value)
    return ExperimentConfig(**overrides)


def _corpus_root(args, catalog_root: Path) -> Path:
    return args.corpus if args.corpus is not None else catalog_root / "fixtures"


def _checkpoint_path(args, catalog_root: Path) -> Path:
    if args.checkpoint is not None:
        return args.checkpoint
    if args.config is not None:
        configured = load_config(args.config).embedder_path
        if configured is not None:
            return configured
    return catalog_root / "embedder.pt"


def _service_config(args) -> ServiceConfig:
    """Full service wiring from the config file, or a catalog-rooted default."""
    if args.config is not None:
        config = load_config(args.config)
    else:
        root = _catalog_root(args)
        embedder = root / "embedder.pt"
        # A primed catalog knows its classes; an empty one falls back to
        # the detector backend's default vocabulary.
        config = ServiceConfig(catalog_root=root, fixture_root=root / "fixtures",
                               embedder_path=embedder if embedder.exists() else None,
                               classes=tuple(Catalog(root).known_classes()))
    overrides = {}
    if getattr(args, "provider", None):
        overrides["provider"] = args.provider
    if getattr(args, "level", None):
        overrides["default_level"] = args.level
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.catalog is not None:
        overrides["catalog_root"] = args.catalog
    if overrides:
        config = ServiceConfig(**{**config.__dict__, **overrides})
    return config


def cmd_train(args) -> int:
    catalog_root = _catalog_root(args)
    catalog = Catalog(catalog_root)
    config = _experiment_config(args)
    corpus = ensure_corpus(_corpus_root(args, catalog_root), config)
    images = import_corpus(catalog, corpus)
    classes = sorted(set(record.keyword for record in images))
    ensure_anchors(catalog, classes, seed=config.seed)
    splits = build_splits(catalog, make_backend(classes), images, config)
    embedder = fit_embedder(catalog, splits, config)
    checkpoint = _checkpoint_path(args, catalog_root)
    checkpoint.parent.mkdir(parents=True, exist_ok=True)
    embedder.save(checkpoint)
    history = history_to_csv(embedder.history_, checkpoint.with_suffix(".history.csv"))
    print(f"checkpoint written: {checkpoint} "
          f"(best epoch {embedder.best_epoch_}, history {history})")
    return 0


def cmd_calibrate(args) -> int:
    catalog_root = _catalog_root(args)
    catalog = Catalog(catalog_root)
    config = _experiment_config(args)
    checkpoint = _checkpoint_path(args, catalog_root)
    if not checkpoint.exists():
        raise ConfigurationError(f"embedder checkpoint not found: {checkpoint}")
    embedder = ContrastiveEmbedder.load(checkpoint)
    corpus = ensure_corpus(_corpus_root(args, catalog_root), config)
    images = import_corpus(catalog, corpus)
    classes = sorted(set(record.keyword for record in images))
    ensure_anchors(catalog, classes, seed=config.seed)
    splits = build_splits(catalog, make_backend(classes), images, config)
    profiles = calibrate_classes(catalog, embedder, splits.val, splits.truth, classes)
    for name in sorted(profiles):
        profile = profiles[name]
        print(f"{name}: fp0={profile.fp0:.4f} fn0={profile.fn0:.4f} "
              f"samples={profile.sample_count} -> {catalog.profile_path(name)}")
    return 0


def cmd_curate(args) -> int:
    runtime = build_runtime(_service_config(args))
    try:
        job = runtime.runner.submit(args.keyword, args.count, args.level)
        runtime.runner.wait(job.id)
    finally:
        runtime.runner.shutdown()
    if job.state != "done":
        print(f"error: job {job.id} {job.state}: {job.error}", file=sys.stderr)
        return 1
    print(f"job {job.id} done: {job.progress}")
    return 0


def cmd_evaluate(args) -> int:
    catalog_root = _catalog_root(args)
    catalog = Catalog(catalog_root)
    config = _experiment_config(args)
    result = run_experiment(catalog, _corpus_root(args, catalog_root), config)
    checkpoint = _checkpoint_path(args, catalog_root)
    checkpoint.parent.mkdir(parents=True, exist_ok=True)
    result.embedder.save(checkpoint)
    out = args.out if args.out is not None else catalog_root / "reports" / "compare.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    result.report.to_csv(out)
    for method in result.report.methods:
        mean = result.report.mean(method)
        shown = "undefined" if mean is None else f"{mean:.4f}"
        print(f"{method}: average_f1 {shown}")
    print(f"report written: {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .app import create_app

    config = _service_config(args)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
