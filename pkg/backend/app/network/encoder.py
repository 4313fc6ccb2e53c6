"""Multimodal encoder — modality-specific TCN encoders feeding one shared transformer.

Fusion variants:
  intermediate  one encoder per modality, blocks stacked along time, then attention
  early         one encoder over the M-channel input, a single block
  late          one encoder per modality, no shared transformer

Input ``x`` is ``[B, N, M]``; every block is ``[B, N, d]`` and the stacked
sequence is ``[B, n_blocks * N, d]`` in modality order.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from app.config import EncoderConfig
from app.errors import ConfigError
from app.network.tcn import TCN
from app.network.transformer import PositionalEncoding, TransformerBlock


@dataclass
class ForwardTrace:
    """Intermediate tensors of one encoder pass."""

    z_blocks: list[torch.Tensor]        # per block [B, N, d]
    z_multi: torch.Tensor               # [B, T, d]
    h_multi: torch.Tensor               # [B, T, d]
    attention: torch.Tensor | None      # [B, heads, T, T]
    block_len: int

    @property
    def n_blocks(self) -> int:
        return len(self.z_blocks)

    def h_blocks(self) -> list[torch.Tensor]:
        """h_multi decomposed back into per-block rows, in stacking order."""
        return list(torch.split(self.h_multi, self.block_len, dim=1))


class ModalityEncoder(nn.Module):
    """z = LayerNorm(Linear_d(TCN(x))) per time step; without a TCN the raw channels are projected."""

    def __init__(self, cfg: EncoderConfig, in_channels: int = 1):
        super().__init__()
        self.tcn = TCN(cfg, in_channels) if cfg.use_tcn else None
        width = cfg.tcn_filters if cfg.use_tcn else in_channels
        self.proj = nn.Linear(width, cfg.d_embed)
        self.norm = nn.LayerNorm(cfg.d_embed)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: [B, N, C]
        if self.tcn is not None:
            x = self.tcn(x.transpose(1, 2)).transpose(1, 2)
        return self.norm(self.proj(x))


class MultimodalEncoder(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        early = cfg.fusion == "early"
        self.n_blocks = 1 if early else cfg.n_modalities
        in_channels = cfg.n_modalities if early else 1
        self.encoders = nn.ModuleList(ModalityEncoder(cfg, in_channels) for _ in range(self.n_blocks))

        self.shared = cfg.use_transformer and cfg.fusion != "late"
        n_tokens = self.n_blocks * cfg.window_len
        self.pos = PositionalEncoding(cfg.positional_encoding, n_tokens, cfg.d_embed) if self.shared else None
        self.transformer = TransformerBlock(cfg) if self.shared else None

    def forward(self, x: torch.Tensor) -> ForwardTrace:
        if x.dim() != 3 or x.shape[2] != self.cfg.n_modalities:
            raise ConfigError(
                f"encoder expects input [B, N, {self.cfg.n_modalities}], got {list(x.shape)}"
            )
        if self.cfg.positional_encoding != "none" and x.shape[1] != self.cfg.window_len:
            raise ConfigError(f"positional encoding is sized for N={self.cfg.window_len}, got N={x.shape[1]}")

        if self.cfg.fusion == "early":
            z_blocks = [self.encoders[0](x)]
        else:
            z_blocks = [enc(x[:, :, m : m + 1]) for m, enc in enumerate(self.encoders)]
        z_multi = torch.cat(z_blocks, dim=1)

        attention = None
        h_multi = z_multi
        if self.shared:
            h_multi, attention = self.transformer(self.pos(z_multi))
        return ForwardTrace(z_blocks, z_multi, h_multi, attention, block_len=x.shape[1])
