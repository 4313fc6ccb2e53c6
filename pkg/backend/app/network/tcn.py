"""Temporal convolutional backbone — stacked residual blocks of dilated causal convolutions.

Input and output are channel-first: ``[B, C, N]``. Causal padding is applied
on the left only (pad both sides, then chomp the right), so the output at
step t never sees inputs after t.
"""

from __future__ import annotations

import torch
from torch import nn
from torch.nn.utils.parametrizations import weight_norm

from app.config import EncoderConfig


def receptive_field(cfg: EncoderConfig) -> int:
    """Number of input steps (including t itself) that can influence output step t."""
    if not cfg.use_tcn:
        return 1
    history = sum((cfg.tcn_kernel - 1) * d for d in cfg.tcn_dilations)
    return 1 + cfg.tcn_convs_per_block * history


class Chomp1d(nn.Module):
    """Drops the trailing ``chomp`` steps produced by symmetric padding."""

    def __init__(self, chomp: int):
        super().__init__()
        self.chomp = chomp

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x[:, :, : -self.chomp].contiguous() if self.chomp else x


def _causal_conv(in_ch: int, out_ch: int, kernel: int, dilation: int, padding: int) -> nn.Module:
    conv = nn.Conv1d(in_ch, out_ch, kernel, padding=padding, dilation=dilation)
    nn.init.zeros_(conv.bias)
    # g is initialised to ||v|| per output filter, so the effective weight starts equal to v
    return weight_norm(conv, name="weight", dim=0)


class TemporalBlock(nn.Module):
    """(causal conv → weight-norm → ReLU → dropout) × n, plus a 1×1-projected residual."""

    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        kernel: int,
        dilation: int,
        padding: int,
        dropout: float,
        n_convs: int = 2,
    ):
        super().__init__()
        layers: list[nn.Module] = []
        for i in range(n_convs):
            layers += [
                _causal_conv(in_ch if i == 0 else out_ch, out_ch, kernel, dilation, padding),
                Chomp1d(padding),
                nn.ReLU(),
                nn.Dropout(dropout),
            ]
        self.net = nn.Sequential(*layers)
        self.downsample = nn.Conv1d(in_ch, out_ch, 1) if in_ch != out_ch else None
        if self.downsample is not None:
            nn.init.zeros_(self.downsample.bias)
        self.relu = nn.ReLU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        res = x if self.downsample is None else self.downsample(x)
        return self.relu(self.net(x) + res)


class TCN(nn.Module):
    """One temporal block per configured dilation, ``tcn_filters`` channels throughout."""

    def __init__(self, cfg: EncoderConfig, in_channels: int = 1):
        super().__init__()
        blocks = []
        for i, (dilation, padding) in enumerate(zip(cfg.tcn_dilations, cfg.paddings)):
            blocks.append(
                TemporalBlock(
                    in_ch=in_channels if i == 0 else cfg.tcn_filters,
                    out_ch=cfg.tcn_filters,
                    kernel=cfg.tcn_kernel,
                    dilation=dilation,
                    padding=padding,
                    dropout=cfg.tcn_dropout,
                    n_convs=cfg.tcn_convs_per_block,
                )
            )
        self.blocks = nn.Sequential(*blocks)
        self.in_channels = in_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.blocks(x)
