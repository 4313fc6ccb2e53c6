"""Downstream emotion recognition — frozen, fine-tuned or from scratch."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from app.checks.base import log_check_result
from app.checks.fold_checks import FoldValidator
from app.config import EncoderConfig, TrainConfig
from app.datasets.checkpoint import Checkpoint, restore_into
from app.errors import ConfigError, DivergenceError, InputError
from app.models import WindowSet
from app.network.gradients import apply_gradients, compute_gradients
from app.network.losses import supervised_loss
from app.network.models import EmotionModel, build_emotion_model
from app.seeding import derive_seed, seed_everything, torch_generator

log = logging.getLogger(__name__)

_fold_checks = FoldValidator()
PREDICT_BATCH = 256


@dataclass
class DownstreamResult:
    model: EmotionModel
    history: list[float] = field(default_factory=list)      # mean training loss per epoch
    flags: list[str] = field(default_factory=list)


def _encoder_config(checkpoint: Checkpoint | None, enc_cfg: EncoderConfig | None) -> EncoderConfig:
    if checkpoint is not None:
        if enc_cfg is not None and enc_cfg != checkpoint.encoder_config:
            log.debug("Using the checkpoint's encoder config instead of the run's")
        return checkpoint.encoder_config
    if enc_cfg is None:
        raise ConfigError("training from scratch needs an encoder config")
    return enc_cfg


def train_downstream(
    checkpoint: Checkpoint | None,
    data: WindowSet,
    n_classes: int,
    cfg: TrainConfig,
    enc_cfg: EncoderConfig | None = None,
    subject_id: str = "",
) -> DownstreamResult:
    """Train the emotion classifier on labelled windows; the final-epoch model is returned.

    ``subject_id`` names the held-out subject in fold warnings.
    """
    cfg.require_checkpoint(checkpoint is not None)
    if len(data) == 0:
        raise InputError("no labelled windows to train on")
    if np.any(data.labels < 0) or np.any(data.labels >= n_classes):
        raise InputError(f"training labels must lie in [0, {n_classes - 1}]")

    flags: list[str] = []
    result = _fold_checks.check(
        kind="train_classes", labels=data.labels, n_classes=n_classes, subject_id=subject_id,
    )
    if not result.passed:
        log_check_result(result, log)
        flags.append(result.check_name)

    seed_everything(cfg.seed)
    model = build_emotion_model(_encoder_config(checkpoint, enc_cfg), n_classes, cfg.seed)
    if checkpoint is not None:
        restore_into(model, checkpoint, prefix="encoder.")
    if cfg.mode == "frozen":
        model.freeze_encoder()
        params = model.head_parameters()
    else:
        params = list(model.parameters())
    optimizer = torch.optim.SGD(params, lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)

    x = torch.as_tensor(data.values, dtype=torch.float32)
    y = torch.as_tensor(data.labels, dtype=torch.long)
    shuffle = torch_generator(derive_seed(cfg.seed, 2))
    history: list[float] = []

    for epoch in range(1, cfg.epochs + 1):
        model.train()
        loss_sum, seen = 0.0, 0
        for batch in torch.randperm(len(data), generator=shuffle).split(cfg.batch_size):
            if len(batch) < 2:
                continue
            logits = model.block_logits(x[batch])
            loss = supervised_loss(logits[0], y[batch])
            for extra in logits[1:]:
                loss = loss + supervised_loss(extra, y[batch])
            if not torch.isfinite(loss):
                raise DivergenceError(f"downstream loss became {loss.item()} in epoch {epoch}")
            optimizer.zero_grad(set_to_none=True)
            apply_gradients(model, compute_gradients(loss, model))
            optimizer.step()
            loss_sum += loss.item() * len(batch)
            seen += len(batch)
        history.append(loss_sum / max(seen, 1))
        log.debug("Downstream epoch %d/%d  loss=%.4f", epoch, cfg.epochs, history[-1])

    return DownstreamResult(model=model, history=history, flags=flags)


def predict(model: EmotionModel, values: np.ndarray, batch_size: int = PREDICT_BATCH) -> np.ndarray:
    model.eval()
    x = torch.as_tensor(values, dtype=torch.float32)
    out = []
    with torch.no_grad():
        for start in range(0, len(x), batch_size):
            out.append(model(x[start:start + batch_size]).argmax(dim=1))
    return torch.cat(out).numpy() if out else np.zeros(0, dtype=np.int64)
