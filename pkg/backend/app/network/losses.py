from __future__ import annotations

import torch
import torch.nn.functional as F

from app.errors import InputError


def _check_labels(labels: torch.Tensor, n_classes: int) -> None:
    if labels.numel() and (int(labels.min()) < 0 or int(labels.max()) >= n_classes):
        raise InputError(
            f"labels must lie in [0, {n_classes - 1}], got range [{int(labels.min())}, {int(labels.max())}]"
        )


def supervised_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Batch-averaged cross-entropy over ``logits [B, e]``."""
    labels = labels.long()
    _check_labels(labels, logits.shape[-1])
    return F.cross_entropy(logits, labels)


def pretext_loss(
    logits: list[torch.Tensor],
    labels: torch.Tensor,
) -> tuple[torch.Tensor, list[torch.Tensor]]:
    """Per-modality cross-entropy and their sum, accumulated left to right.

    ``labels`` is ``[B, len(logits)]``; column m belongs to head m.
    """
    if labels.dim() != 2 or labels.shape[1] != len(logits):
        raise InputError(f"expected labels [B, {len(logits)}], got {list(labels.shape)}")
    components = [supervised_loss(l, labels[:, m]) for m, l in enumerate(logits)]
    total = components[0]
    for c in components[1:]:
        total = total + c
    return total, components
