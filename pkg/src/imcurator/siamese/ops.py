"""Distance and contrastive-loss primitives.

The scalar functions are the reference semantics: loss(y, d, m) =
0.5 * (y * d^2 + (1 - y) * max(0, m - d)^2), with y = 1 for similar
pairs. The hinge keeps already-separated dissimilar pairs (d >= m) from
being pulled back toward the margin. Batch variants mirror the same
formula on tensors for training.
"""

from __future__ import annotations

import numpy as np
import torch

from ..errors import ContractError
from ..validation import check_finite_nonnegative, check_positive

# Keeps sqrt differentiable when paired embeddings coincide.
_DISTANCE_EPS = 1e-12


def euclidean_distance(u, v) -> float:
    """Euclidean norm of u - v for equal-length vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ContractError(f"vector shapes must match, got {u.shape} vs {v.shape}")
    return float(np.sqrt(np.sum((u - v) ** 2)))


def contrastive_loss(y: int, d: float, m: float) -> float:
    """Loss for one pair with similarity label y, distance d, margin m."""
    if y not in (0, 1):
        raise ContractError(f"y must be 0 or 1, got {y!r}")
    check_finite_nonnegative(d, "d")
    check_positive(m, "m")
    return 0.5 * (y * d * d + (1 - y) * max(0.0, m - d) ** 2)


def contrastive_loss_grad_d(y: int, d: float, m: float) -> float:
    """Analytic d(loss)/dd; the hinge point d = m takes the zero branch."""
    if y not in (0, 1):
        raise ContractError(f"y must be 0 or 1, got {y!r}")
    check_finite_nonnegative(d, "d")
    check_positive(m, "m")
    if y == 1:
        return d
    return -(m - d) if d < m else 0.0


def batch_distances(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Per-row Euclidean distances for two [batch, dim] tensors."""
    if a.shape != b.shape:
        raise ContractError(f"tensor shapes must match, got {tuple(a.shape)} vs {tuple(b.shape)}")
    return torch.sqrt(((a - b) ** 2).sum(dim=1) + _DISTANCE_EPS)


def batch_contrastive_loss(y: torch.Tensor, d: torch.Tensor, m: float) -> torch.Tensor:
    """Mean contrastive loss over a batch of labels and distances."""
    check_positive(m, "m")
    hinge = torch.clamp(m - d, min=0.0)
    return (0.5 * (y * d ** 2 + (1.0 - y) * hinge ** 2)).mean()
