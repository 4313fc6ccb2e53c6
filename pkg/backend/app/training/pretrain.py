"""Self-supervised pretraining — transformation recognition on every modality.

Usage:
    result = pretrain(pset, enc_cfg, run.pretext_train_config())
    save_checkpoint(result.checkpoint, out / "pretrained.ckpt")
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from app.config import EncoderConfig, TrainConfig
from app.datasets.checkpoint import Checkpoint
from app.errors import ConfigError, DivergenceError, InputError
from app.models import PretextSet, TrainingStage
from app.network.gradients import apply_gradients, compute_gradients
from app.network.losses import pretext_loss
from app.network.models import PretextModel, build_pretext_model
from app.seeding import derive_rng, derive_seed, seed_everything, torch_generator

log = logging.getLogger(__name__)

EVAL_BATCH = 256


@dataclass
class EpochStats:
    epoch: int
    loss: float
    component_losses: list[float]
    accuracy: list[float]                     # per head, on the training batches
    holdout_accuracy: list[float] | None = None


@dataclass
class PretextEval:
    loss: float
    component_losses: list[float]
    accuracy: list[float]


@dataclass
class PretrainResult:
    checkpoint: Checkpoint
    model: PretextModel
    history: list[EpochStats] = field(default_factory=list)


def split_by_subject(pset: PretextSet, holdout_frac: float, seed: int) -> tuple[PretextSet, PretextSet | None]:
    """Hold out whole subjects (at least one, never all) for pretext validation."""
    if holdout_frac <= 0:
        return pset, None
    subjects = sorted(set(pset.subject_ids.tolist()))
    if len(subjects) < 2:
        raise InputError("a subject-wise holdout needs at least 2 subjects")
    n_hold = min(len(subjects) - 1, max(1, int(round(holdout_frac * len(subjects)))))
    held = set(derive_rng(seed, 101).choice(subjects, size=n_hold, replace=False).tolist())
    mask = np.array([s in held for s in pset.subject_ids])
    log.info("Pretext holdout subjects: %s", ", ".join(sorted(held)))
    return pset.subset(np.flatnonzero(~mask)), pset.subset(np.flatnonzero(mask))


def _targets(model: PretextModel, labels: np.ndarray) -> torch.Tensor:
    if model.cfg.pretext_head == "overall" and not np.all(labels == labels[:, :1]):
        raise ConfigError("the overall pretext head needs the same transform on every modality")
    return model.loss_targets(torch.as_tensor(labels, dtype=torch.long))


def evaluate_pretext(model: PretextModel, pset: PretextSet, batch_size: int = EVAL_BATCH) -> PretextEval:
    """Loss and per-head transform-recognition accuracy in eval mode."""
    model.eval()
    y = _targets(model, pset.labels)
    x = torch.as_tensor(pset.values, dtype=torch.float32)
    n_heads = y.shape[1]
    loss_sum, comp_sum = 0.0, np.zeros(n_heads)
    correct = np.zeros(n_heads)
    with torch.no_grad():
        for start in range(0, len(pset), batch_size):
            xb, yb = x[start:start + batch_size], y[start:start + batch_size]
            logits, _ = model(xb)
            total, comps = pretext_loss(logits, yb)
            loss_sum += total.item() * len(xb)
            comp_sum += np.array([c.item() for c in comps]) * len(xb)
            correct += np.array([(l.argmax(dim=1) == yb[:, m]).sum().item() for m, l in enumerate(logits)])
    n = max(len(pset), 1)
    return PretextEval(loss_sum / n, (comp_sum / n).tolist(), (correct / n).tolist())


def pretrain(
    pset: PretextSet,
    enc_cfg: EncoderConfig,
    cfg: TrainConfig,
    holdout: PretextSet | None = None,
) -> PretrainResult:
    """SGD on the summed per-modality cross-entropy; the final-epoch model is kept."""
    if len(pset) == 0:
        raise InputError("pretext dataset is empty")
    if pset.values.shape[2] != enc_cfg.n_modalities:
        raise ConfigError(f"pretext samples have {pset.values.shape[2]} modalities, encoder expects {enc_cfg.n_modalities}")

    seed_everything(cfg.seed)
    n_labels = len(pset.label_names)
    model = build_pretext_model(enc_cfg, n_labels, cfg.seed)
    optimizer = torch.optim.SGD(model.parameters(), lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)

    x = torch.as_tensor(pset.values, dtype=torch.float32)
    y = _targets(model, pset.labels)
    shuffle = torch_generator(derive_seed(cfg.seed, 1))
    history: list[EpochStats] = []

    for epoch in range(1, cfg.epochs + 1):
        model.train()
        loss_sum, comp_sum = 0.0, np.zeros(y.shape[1])
        correct = np.zeros(y.shape[1])
        seen = 0
        for batch in torch.randperm(len(pset), generator=shuffle).split(cfg.batch_size):
            if len(batch) < 2:
                continue                                    # BatchNorm cannot train on one sample
            xb, yb = x[batch], y[batch]
            logits, _ = model(xb)
            total, comps = pretext_loss(logits, yb)
            if not torch.isfinite(total):
                raise DivergenceError(f"pretext loss became {total.item()} in epoch {epoch}")
            optimizer.zero_grad(set_to_none=True)
            apply_gradients(model, compute_gradients(total, model))
            optimizer.step()

            loss_sum += total.item() * len(batch)
            comp_sum += np.array([c.item() for c in comps]) * len(batch)
            correct += np.array([(l.argmax(dim=1) == yb[:, m]).sum().item() for m, l in enumerate(logits)])
            seen += len(batch)

        n = max(seen, 1)
        stats = EpochStats(epoch, loss_sum / n, (comp_sum / n).tolist(), (correct / n).tolist())
        if holdout is not None and len(holdout):
            stats.holdout_accuracy = evaluate_pretext(model, holdout).accuracy
        history.append(stats)
        log.info(
            "Pretext epoch %d/%d  loss=%.4f  acc=%s%s",
            epoch, cfg.epochs, stats.loss,
            "/".join(f"{a:.3f}" for a in stats.accuracy),
            f"  holdout={'/'.join(f'{a:.3f}' for a in stats.holdout_accuracy)}" if stats.holdout_accuracy else "",
        )

    ckpt = Checkpoint.from_model(
        model, enc_cfg, n_labels, cfg.seed, TrainingStage.PRETRAINED, label_names=pset.label_names
    )
    return PretrainResult(checkpoint=ckpt, model=model, history=history)
