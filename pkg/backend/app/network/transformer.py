"""Shared encoder — one post-norm transformer block over stacked modality tokens."""

from __future__ import annotations

import math

import torch
from torch import nn

from app.config import EncoderConfig


def sinusoidal_encoding(n_positions: int, d_model: int) -> torch.Tensor:
    position = torch.arange(n_positions, dtype=torch.float64).unsqueeze(1)
    div_term = torch.exp(torch.arange(0, d_model, 2, dtype=torch.float64) * (-math.log(10000.0) / d_model))
    pe = torch.zeros(n_positions, d_model, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(position * div_term)
    pe[:, 1::2] = torch.cos(position * div_term[: d_model // 2])
    return pe


class PositionalEncoding(nn.Module):
    """Adds nothing, a fixed sinusoidal table, or a learned ``[T, d]`` table."""

    def __init__(self, kind: str, n_positions: int, d_model: int):
        super().__init__()
        self.kind = kind
        if kind == "fixed":
            self.register_buffer("table", sinusoidal_encoding(n_positions, d_model).float(), persistent=False)
        elif kind == "learnable":
            self.table = nn.Parameter(torch.zeros(n_positions, d_model))
            nn.init.normal_(self.table, std=0.02)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.kind == "none":
            return x
        return x + self.table[: x.shape[1]].to(x.dtype)


class MultiHeadSelfAttention(nn.Module):
    """softmax(QK^T / sqrt(d_head)) V per head, heads concatenated and projected."""

    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.w_q = nn.Linear(d_model, d_model)
        self.w_k = nn.Linear(d_model, d_model)
        self.w_v = nn.Linear(d_model, d_model)
        self.w_o = nn.Linear(d_model, d_model)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        b, t, _ = x.shape
        return x.view(b, t, self.n_heads, self.d_head).transpose(1, 2)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        b, t, d = x.shape
        q, k, v = self._split(self.w_q(x)), self._split(self.w_k(x)), self._split(self.w_v(x))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        weights = torch.softmax(scores, dim=-1)
        out = (weights @ v).transpose(1, 2).reshape(b, t, d)
        return self.w_o(out), weights


class TransformerBlock(nn.Module):
    """x → LN(x + Drop(MHA(x))) → LN(· + Drop(FF(·)))."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        d = cfg.d_embed
        self.attn = MultiHeadSelfAttention(d, cfg.n_heads)
        self.drop1 = nn.Dropout(cfg.attn_dropout)
        self.norm1 = nn.LayerNorm(d)
        self.ff = nn.Sequential(
            nn.Linear(d, cfg.ff_dim),
            nn.ReLU(),
            nn.Dropout(cfg.attn_dropout),
            nn.Linear(cfg.ff_dim, d),
        )
        self.drop2 = nn.Dropout(cfg.attn_dropout)
        self.norm2 = nn.LayerNorm(d)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        attn_out, weights = self.attn(x)
        h = self.norm1(x + self.drop1(attn_out))
        h = self.norm2(h + self.drop2(self.ff(h)))
        return h, weights
