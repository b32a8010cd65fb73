"""Shared-weight embedding engine: pair training, distances, scoring."""

from .embedder import ContrastiveEmbedder, score_crops
from .networks import EmbedderConfig, EmbeddingNet, preprocess
from .ops import contrastive_loss, contrastive_loss_grad_d, euclidean_distance
from .training import PairSample, TrainConfig, TrainResult, history_to_csv, sample_pairs, train

__all__ = [
    "ContrastiveEmbedder",
    "EmbedderConfig",
    "EmbeddingNet",
    "PairSample",
    "TrainConfig",
    "TrainResult",
    "contrastive_loss",
    "contrastive_loss_grad_d",
    "euclidean_distance",
    "history_to_csv",
    "preprocess",
    "sample_pairs",
    "score_crops",
    "train",
]
