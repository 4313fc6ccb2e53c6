"""Pretext and emotion models built on the shared ``MultimodalEncoder``.

Usage:
    model = build_pretext_model(enc_cfg, n_labels=6, seed=0)
    logits, trace = model(x)             # one logits tensor per head
    emo = build_emotion_model(enc_cfg, n_classes=2, seed=0)
    emo.encoder.load_state_dict(model.encoder.state_dict())
"""

from __future__ import annotations

import logging

import torch
from torch import nn

from app.config import EncoderConfig
from app.network.encoder import ForwardTrace, MultimodalEncoder
from app.network.heads import FusionHead, PretextHead

log = logging.getLogger(__name__)


def zero_biases(module: nn.Module) -> None:
    for m in module.modules():
        if isinstance(m, (nn.Linear, nn.Conv1d)) and m.bias is not None:
            nn.init.zeros_(m.bias)


class PretextModel(nn.Module):
    """Encoder plus transformation-recognition heads.

    ``per_modality``: one head per modality reading its own block (every head
    reads the single block under early fusion). ``overall``: one head over
    all pooled blocks, trained with a single loss.
    """

    def __init__(self, cfg: EncoderConfig, n_labels: int):
        super().__init__()
        self.cfg = cfg
        self.n_labels = n_labels
        self.encoder = MultimodalEncoder(cfg)
        n_blocks = self.encoder.n_blocks
        if cfg.pretext_head == "overall":
            self.heads = nn.ModuleList([
                FusionHead(cfg.d_embed, n_blocks, cfg.pretext_hidden, n_labels, cfg.pretext_dropout, cfg.bn_momentum)
            ])
        else:
            self.heads = nn.ModuleList(
                PretextHead(cfg.d_embed, cfg.pretext_hidden, n_labels, cfg.pretext_dropout, cfg.bn_momentum)
                for _ in range(cfg.n_modalities)
            )

    @property
    def n_outputs(self) -> int:
        return len(self.heads)

    def forward(self, x: torch.Tensor) -> tuple[list[torch.Tensor], ForwardTrace]:
        trace = self.encoder(x)
        blocks = trace.h_blocks()
        if self.cfg.pretext_head == "overall":
            return [self.heads[0](blocks)], trace
        return [head(blocks[min(m, len(blocks) - 1)]) for m, head in enumerate(self.heads)], trace

    def loss_targets(self, labels: torch.Tensor) -> torch.Tensor:
        """Label columns matching the heads: all M columns, or the shared column for the overall head."""
        return labels[:, :1] if self.cfg.pretext_head == "overall" else labels


class EmotionModel(nn.Module):
    """Encoder plus emotion classifier.

    Late fusion keeps one classifier per modality; the decision averages
    their softmax outputs. Other variants pool and concatenate the blocks
    into a single classifier.
    """

    def __init__(self, cfg: EncoderConfig, n_classes: int):
        super().__init__()
        self.cfg = cfg
        self.n_classes = n_classes
        self.encoder = MultimodalEncoder(cfg)
        self.encoder_frozen = False
        if cfg.fusion == "late":
            self.heads = nn.ModuleList(
                PretextHead(cfg.d_embed, cfg.emotion_hidden, n_classes, cfg.emotion_dropout, cfg.bn_momentum)
                for _ in range(self.encoder.n_blocks)
            )
        else:
            self.heads = nn.ModuleList([
                FusionHead(
                    cfg.d_embed, self.encoder.n_blocks, cfg.emotion_hidden, n_classes,
                    cfg.emotion_dropout, cfg.bn_momentum,
                )
            ])

    def freeze_encoder(self) -> None:
        self.encoder_frozen = True
        for p in self.encoder.parameters():
            p.requires_grad_(False)
        self.encoder.eval()

    def train(self, mode: bool = True) -> "EmotionModel":
        super().train(mode)
        if self.encoder_frozen:
            # frozen encoder keeps eval behaviour (no dropout, stored BN stats)
            self.encoder.eval()
        return self

    def head_parameters(self) -> list[nn.Parameter]:
        return list(self.heads.parameters())

    def block_logits(self, x: torch.Tensor) -> list[torch.Tensor]:
        blocks = self.encoder(x).h_blocks()
        if self.cfg.fusion == "late":
            return [head(blocks[m]) for m, head in enumerate(self.heads)]
        return [self.heads[0](blocks)]

    @staticmethod
    def decide(logits: list[torch.Tensor]) -> torch.Tensor:
        """Decision scores ``[B, e]``: the logits, or log of the averaged softmax for several heads."""
        if len(logits) == 1:
            return logits[0]
        probs = torch.stack([torch.softmax(l, dim=1) for l in logits]).mean(dim=0)
        return torch.log(probs)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decide(self.block_logits(x))


def _seeded(builder, seed: int):
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = builder()
    zero_biases(model)
    return model


def build_pretext_model(cfg: EncoderConfig, n_labels: int, seed: int) -> PretextModel:
    model = _seeded(lambda: PretextModel(cfg, n_labels), seed)
    log.debug("Built pretext model: %d parameters", sum(p.numel() for p in model.parameters()))
    return model


def build_emotion_model(cfg: EncoderConfig, n_classes: int, seed: int) -> EmotionModel:
    return _seeded(lambda: EmotionModel(cfg, n_classes), seed)
