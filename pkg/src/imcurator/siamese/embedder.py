"""Estimator facade over the embedding network plus catalog crop scoring."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
from PIL import Image
from sklearn.base import BaseEstimator

from ..catalog import Catalog, CropRecord, DistanceScore
from ..errors import ConfigurationError, EmbeddingError
from .networks import EmbedderConfig, EmbeddingNet, preprocess
from .ops import euclidean_distance
from .training import PairSample, TrainConfig, TrainResult, train

CHECKPOINT_VERSION = 1


class ContrastiveEmbedder(BaseEstimator):
    """Shared-weight embedder with a fit/transform interface.

    fit(train_pairs, val_pairs) trains from a fresh seeded
    initialization and keeps the best epoch; transform maps images to
    embedding rows. Distances between rows are plain Euclidean norms.
    """

    def __init__(self, backbone: str = "tiny-test", embedding_dim: int = 128,
                 margin: float = 2.0, learning_rate: float = 0.000015,
                 epochs: int = 30, batch_size: int = 64, seed: int = 0,
                 negative_ratio: float = 19.0, pretrained: bool = True):
        self.backbone = backbone
        self.embedding_dim = embedding_dim
        self.margin = margin
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.negative_ratio = negative_ratio
        self.pretrained = pretrained

    def _net_config(self) -> EmbedderConfig:
        return EmbedderConfig(backbone_variant=self.backbone,
                              embedding_dim=self.embedding_dim,
                              margin=self.margin,
                              pretrained=self.pretrained)

    def _train_config(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate, epochs=self.epochs,
                           batch_size=self.batch_size, seed=self.seed,
                           negative_ratio=self.negative_ratio)

    def initialize(self) -> "ContrastiveEmbedder":
        """Build the network from the seed; same seed, same initial weights."""
        torch.manual_seed(self.seed)
        self.model_ = EmbeddingNet(self._net_config())
        return self

    def fit(self, train_pairs: Sequence[PairSample],
            val_pairs: Sequence[PairSample]) -> "ContrastiveEmbedder":
        self.initialize()
        result: TrainResult = train(self.model_, train_pairs, val_pairs,
                                    self._train_config())
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.val_average_f1_ = result.val_average_f1
        return self

    def _require_model(self) -> EmbeddingNet:
        if not hasattr(self, "model_"):
            raise EmbeddingError("embedder has no weights; fit, initialize, or load first")
        return self.model_

    def transform(self, images) -> np.ndarray:
        """Embed a sequence of PIL images or paths into an [n, dim] array."""
        model = self._require_model()
        model.eval()
        config = model.config
        rows = []
        with torch.no_grad():
            for start in range(0, len(images), self.batch_size):
                chunk = images[start:start + self.batch_size]
                batch = torch.stack([preprocess(img, config) for img in chunk])
                rows.append(model(batch).numpy())
        return np.concatenate(rows) if rows else np.zeros((0, self.embedding_dim))

    def embed(self, image) -> np.ndarray:
        return self.transform([image])[0]

    def save(self, path) -> Path:
        """Checkpoint weights with config, seed, best epoch, and history."""
        model = self._require_model()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        history = [vars(h) for h in getattr(self, "history_", [])]
        torch.save({
            "version": CHECKPOINT_VERSION,
            "params": self.get_params(),
            "seed": self.seed,
            "epoch": getattr(self, "best_epoch_", None),
            "val_average_f1": getattr(self, "val_average_f1_", None),
            "history": history,
            "state_dict": model.state_dict(),
        }, path)
        return path

    @classmethod
    def load(cls, path) -> "ContrastiveEmbedder":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"checkpoint does not exist: {path}")
        payload = torch.load(path, map_location="cpu", weights_only=False)
        embedder = cls(**payload["params"])
        embedder.model_ = EmbeddingNet(embedder._net_config())
        embedder.model_.load_state_dict(payload["state_dict"])
        embedder.model_.eval()
        if payload.get("epoch") is not None:
            embedder.best_epoch_ = payload["epoch"]
        if payload.get("val_average_f1") is not None:
            embedder.val_average_f1_ = payload["val_average_f1"]
        return embedder


def _load_pixels(path: Path):
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, ValueError) as exc:
        raise EmbeddingError(f"cannot decode image {path}: {exc}")


def score_crops(catalog: Catalog, embedder: ContrastiveEmbedder,
                crops: Sequence[CropRecord],
                against: Optional[str] = None) -> list[DistanceScore]:
    """Distance of each crop to a class anchor; records the value on the crop.

    By default every crop is scored against the anchor of its own
    detector class; ``against`` pins one class anchor for the whole
    batch (how a job scores candidates against its keyword).
    """
    anchors = catalog.anchor_set().entries
    anchor_classes = sorted({against or crop.detector_class for crop in crops})
    missing = [c for c in anchor_classes if c not in anchors]
    if missing:
        raise ConfigurationError(f"no anchor registered for classes: {missing}")
    anchor_embeddings = {
        class_name: embedder.embed(_load_pixels(catalog.anchor_file(class_name)))
        for class_name in anchor_classes
    }
    if not crops:
        return []
    crop_embeddings = embedder.transform(
        [_load_pixels(catalog.crop_file(crop.id)) for crop in crops])
    scores = []
    with catalog.bulk():
        for crop, embedding in zip(crops, crop_embeddings):
            class_name = against or crop.detector_class
            distance = euclidean_distance(embedding, anchor_embeddings[class_name])
            catalog.set_distance(crop.id, distance)
            scores.append(DistanceScore(crop_id=crop.id, class_name=class_name,
                                        distance=distance))
    return scores
