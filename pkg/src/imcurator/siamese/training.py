"""Pair sampling and the contrastive training loop.

Each crop yields one similar pair with its own class anchor; dissimilar
pairs reuse crops against uniformly drawn wrong-class anchors until the
realized similar:dissimilar ratio hits the configured target. Model
selection keeps the epoch with the best validation average F1, measured
at the validation set's own best-F1 distance threshold; when that metric
is undefined (single-label validation pairs) the lowest validation loss
wins instead.
"""

from __future__ import annotations

import copy
import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import torch
from PIL import Image

from ..calibrator import LabeledDistance, best_f1_threshold, confusion_at
from ..errors import CalibrationError, ConfigurationError, TrainingError, ValidationError
from ..metrics import average_f1
from .networks import EmbedderConfig, EmbeddingNet, preprocess
from .ops import batch_contrastive_loss, batch_distances


@dataclass(frozen=True)
class PairSample:
    """One training pair: crop pixels vs an anchor, y=1 when same class."""

    image: Image.Image
    anchor: Image.Image
    y: int
    class_name: str

    def __post_init__(self):
        if self.y not in (0, 1):
            raise ValidationError(f"y must be 0 or 1, got {self.y!r}")


@dataclass
class TrainConfig:
    """Optimization schedule and sampling parameters."""

    learning_rate: float = 0.000015
    epochs: int = 30
    batch_size: int = 64
    seed: int = 0
    negative_ratio: float = 19.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError(
                f"learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch size must be >= 1, got {self.batch_size}")
        if self.negative_ratio < 0:
            raise ConfigurationError(
                f"negative ratio must be >= 0, got {self.negative_ratio}")


def sample_pairs(items: Sequence[tuple[str, Image.Image]],
                 anchors: Mapping[str, Image.Image],
                 negative_ratio: float = 19.0,
                 seed: int = 0) -> list[PairSample]:
    """Pair every (class, pixels) item with anchors.

    One y=1 pair per item against its own anchor, then round(n * ratio)
    y=0 pairs cycling through the items with uniformly sampled
    wrong-class anchors. Deterministic for a fixed seed.
    """
    items = list(items)
    if not items:
        return []
    for class_name, _ in items:
        if class_name not in anchors:
            raise ConfigurationError(f"no anchor for class {class_name!r}")
    if negative_ratio > 0 and len(anchors) < 2:
        raise ConfigurationError("dissimilar pairs need at least 2 anchored classes")
    rng = random.Random(seed)
    pairs = [PairSample(image=image, anchor=anchors[class_name], y=1,
                        class_name=class_name)
             for class_name, image in items]
    total_negatives = round(len(items) * negative_ratio)
    class_list = sorted(anchors)
    for j in range(total_negatives):
        class_name, image = items[j % len(items)]
        wrong = rng.choice([c for c in class_list if c != class_name])
        pairs.append(PairSample(image=image, anchor=anchors[wrong], y=0,
                                class_name=wrong))
    return pairs


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_average_f1: Optional[float]


@dataclass
class TrainResult:
    """Best-epoch weights plus the full per-epoch history."""

    state_dict: dict
    history: list[EpochStats]
    best_epoch: int
    val_average_f1: Optional[float]


def _pair_tensors(pairs: Sequence[PairSample], config: EmbedderConfig):
    images = torch.stack([preprocess(p.image, config) for p in pairs])
    anchors = torch.stack([preprocess(p.anchor, config) for p in pairs])
    labels = torch.tensor([float(p.y) for p in pairs])
    return images, anchors, labels


def _forward_distances(model: EmbeddingNet, images: torch.Tensor,
                       anchors: torch.Tensor, batch_size: int) -> torch.Tensor:
    chunks = []
    for start in range(0, len(images), batch_size):
        stop = start + batch_size
        chunks.append(batch_distances(model(images[start:stop]),
                                      model(anchors[start:stop])))
    return torch.cat(chunks)


def _validation_metric(distances: torch.Tensor, labels: torch.Tensor) -> Optional[float]:
    samples = [LabeledDistance(float(d), bool(y))
               for d, y in zip(distances.tolist(), labels.tolist())]
    try:
        threshold = best_f1_threshold(samples)
    except CalibrationError:
        return None
    return average_f1(confusion_at(samples, threshold))


def train(model: EmbeddingNet, train_pairs: Sequence[PairSample],
          val_pairs: Sequence[PairSample], config: TrainConfig) -> TrainResult:
    """Run the contrastive loop and leave the best epoch's weights on the model."""
    if not train_pairs:
        raise TrainingError("train split is empty")
    if not val_pairs:
        raise TrainingError("validation split is empty")
    net_config = model.config
    train_images, train_anchors, train_labels = _pair_tensors(train_pairs, net_config)
    val_images, val_anchors, val_labels = _pair_tensors(val_pairs, net_config)

    generator = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    margin = net_config.margin
    history: list[EpochStats] = []
    best_metric: Optional[tuple] = None
    best_loss: Optional[tuple] = None
    best_metric_state = best_loss_state = None

    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(len(train_pairs), generator=generator)
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            index = order[start:start + config.batch_size]
            optimizer.zero_grad()
            d = batch_distances(model(train_images[index]), model(train_anchors[index]))
            loss = batch_contrastive_loss(train_labels[index], d, margin)
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(index)
        train_loss = total / len(train_pairs)
        if not math.isfinite(train_loss):
            raise TrainingError(
                f"non-finite training loss at epoch {epoch}: {train_loss}")

        model.eval()
        with torch.no_grad():
            val_d = _forward_distances(model, val_images, val_anchors, config.batch_size)
            val_loss = float(batch_contrastive_loss(val_labels, val_d, margin))
        if not math.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}: {val_loss}")
        metric = _validation_metric(val_d, val_labels)
        history.append(EpochStats(epoch=epoch, train_loss=train_loss,
                                  val_loss=val_loss, val_average_f1=metric))

        # Earlier epochs win ties, hence the strict comparisons.
        if metric is not None and (best_metric is None or metric > best_metric[0]):
            best_metric = (metric, epoch)
            best_metric_state = copy.deepcopy(model.state_dict())
        if best_loss is None or val_loss < best_loss[0]:
            best_loss = (val_loss, epoch)
            best_loss_state = copy.deepcopy(model.state_dict())

    if best_metric is not None:
        best_value, best_epoch = best_metric
        state = best_metric_state
    else:
        best_value, best_epoch = None, best_loss[1]
        state = best_loss_state
        best_value = history[best_epoch - 1].val_average_f1
    model.load_state_dict(state)
    return TrainResult(state_dict=state, history=history,
                       best_epoch=best_epoch, val_average_f1=best_value)


def history_to_csv(history: Sequence[EpochStats], path) -> Path:
    """Per-epoch history as CSV: epoch, train_loss, val_loss, val_average_f1."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "val_average_f1"])
        for row in history:
            writer.writerow([row.epoch, repr(row.train_loss), repr(row.val_loss),
                             "" if row.val_average_f1 is None else repr(row.val_average_f1)])
    return path
