"""Classification heads. Softmax lives in the loss; heads return logits."""

from __future__ import annotations

import torch
from torch import nn


def _classifier(in_features: int, hidden: int, n_out: int, dropout: float, bn_momentum: float) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(in_features, hidden),
        nn.BatchNorm1d(hidden, momentum=bn_momentum),
        nn.ReLU(),
        nn.Dropout(dropout),
        nn.Linear(hidden, n_out),
    )


class PretextHead(nn.Module):
    """GAP over the block's N steps, then linear → BN → ReLU → dropout → linear."""

    def __init__(self, d_embed: int, hidden: int, n_out: int, dropout: float, bn_momentum: float = 0.1):
        super().__init__()
        self.mlp = _classifier(d_embed, hidden, n_out, dropout, bn_momentum)

    def forward(self, h_block: torch.Tensor) -> torch.Tensor:
        return self.mlp(h_block.mean(dim=1))


class FusionHead(nn.Module):
    """Pools every block, concatenates them (n_blocks·d wide) and classifies.

    Used as the emotion head and as the single head of the overall-loss
    pretext variant.
    """

    def __init__(
        self,
        d_embed: int,
        n_blocks: int,
        hidden: int,
        n_out: int,
        dropout: float,
        bn_momentum: float = 0.1,
    ):
        super().__init__()
        self.n_blocks = n_blocks
        self.mlp = _classifier(d_embed * n_blocks, hidden, n_out, dropout, bn_momentum)

    def forward(self, h_blocks: list[torch.Tensor]) -> torch.Tensor:
        pooled = torch.cat([h.mean(dim=1) for h in h_blocks], dim=1)
        return self.mlp(pooled)
