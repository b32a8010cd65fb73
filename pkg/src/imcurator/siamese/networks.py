"""Embedding network: backbone variants plus the 3-layer projection head.

Variants: ``small`` and ``large`` reuse MobileNetV3 trunks up to the
penultimate classifier layer (1024- and 1280-wide), ``tiny-test`` is a
from-scratch 3-block convnet for CPU-only runs with no downloads. The
head maps backbone features through 512 and 256 to the embedding, ELU
between layers. One module embeds both sides of a pair, so the towers
share weights by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import torch
from PIL import Image
from torch import nn
from torchvision import models, transforms

from ..errors import ConfigurationError, EmbeddingError

BACKBONE_VARIANTS = ("small", "large", "tiny-test")

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
TINY_MEAN = (0.5, 0.5, 0.5)
TINY_STD = (0.5, 0.5, 0.5)

_DEFAULT_INPUT_SIZE = {"small": (224, 224), "large": (224, 224), "tiny-test": (64, 64)}


@dataclass
class EmbedderConfig:
    """Architecture and preprocessing parameters for one embedder."""

    backbone_variant: str = "tiny-test"
    embedding_dim: int = 128
    margin: float = 2.0
    input_size: Optional[tuple[int, int]] = None
    pretrained: bool = True

    def __post_init__(self):
        if self.backbone_variant not in BACKBONE_VARIANTS:
            raise ConfigurationError(
                f"backbone_variant must be one of {BACKBONE_VARIANTS}, "
                f"got {self.backbone_variant!r}")
        if self.embedding_dim < 2:
            raise ConfigurationError(
                f"embedding_dim must be >= 2, got {self.embedding_dim}")
        if self.margin <= 0:
            raise ConfigurationError(f"margin must be > 0, got {self.margin}")
        if self.input_size is None:
            self.input_size = _DEFAULT_INPUT_SIZE[self.backbone_variant]

    @property
    def normalization(self) -> tuple[tuple, tuple]:
        if self.backbone_variant == "tiny-test":
            return TINY_MEAN, TINY_STD
        return IMAGENET_MEAN, IMAGENET_STD


class TinyTestBackbone(nn.Module):
    """3 strided conv blocks with ELU; no norm layers, so runs are bit-stable."""

    out_features = 64

    def __init__(self):
        super().__init__()
        self.blocks = nn.Sequential(
            nn.Conv2d(3, 16, kernel_size=3, stride=2, padding=1), nn.ELU(),
            nn.Conv2d(16, 32, kernel_size=3, stride=2, padding=1), nn.ELU(),
            nn.Conv2d(32, 64, kernel_size=3, stride=2, padding=1), nn.ELU(),
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.blocks(x)


class _MobileNetTrunk(nn.Module):
    """MobileNetV3 up to the penultimate classifier layer (Linear + Hardswish)."""

    def __init__(self, variant: str, pretrained: bool):
        super().__init__()
        if variant == "small":
            weights = models.MobileNet_V3_Small_Weights.DEFAULT if pretrained else None
            base = models.mobilenet_v3_small(weights=weights)
            self.out_features = 1024
        else:
            weights = models.MobileNet_V3_Large_Weights.DEFAULT if pretrained else None
            base = models.mobilenet_v3_large(weights=weights)
            self.out_features = 1280
        self.features = base.features
        self.avgpool = base.avgpool
        self.pre_head = nn.Sequential(*list(base.classifier.children())[:2])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.avgpool(self.features(x)).flatten(1)
        return self.pre_head(x)


def build_backbone(config: EmbedderConfig) -> nn.Module:
    if config.backbone_variant == "tiny-test":
        return TinyTestBackbone()
    try:
        return _MobileNetTrunk(config.backbone_variant, config.pretrained)
    except Exception as exc:
        if config.pretrained:
            raise ConfigurationError(
                f"pretrained {config.backbone_variant} weights unavailable "
                f"(set pretrained=False for random init): {exc}")
        raise


class EmbeddingNet(nn.Module):
    """Backbone plus 3 fully connected layers down to the embedding."""

    def __init__(self, config: EmbedderConfig):
        super().__init__()
        self.config = config
        self.backbone = build_backbone(config)
        self.head = nn.Sequential(
            nn.Linear(self.backbone.out_features, 512), nn.ELU(),
            nn.Linear(512, 256), nn.ELU(),
            nn.Linear(256, config.embedding_dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone(x))


def _transform(config: EmbedderConfig) -> transforms.Compose:
    mean, std = config.normalization
    height, width = config.input_size
    return transforms.Compose([
        transforms.Resize(min(height, width)),
        transforms.CenterCrop((height, width)),
        transforms.ToTensor(),
        transforms.Normalize(mean=mean, std=std),
    ])


def preprocess(image, config: EmbedderConfig) -> torch.Tensor:
    """PIL image or path to a normalized [3, H, W] tensor."""
    if not isinstance(image, Image.Image):
        try:
            with Image.open(image) as opened:
                image = opened.convert("RGB")
        except (OSError, ValueError) as exc:
            raise EmbeddingError(f"cannot decode image {image!r}: {exc}")
    else:
        image = image.convert("RGB")
    return _transform(config)(image)
