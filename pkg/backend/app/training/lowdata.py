"""Low-data study — LOSO with each training fold subsampled to k windows per class."""

from __future__ import annotations

import logging

import numpy as np

from app.checks.base import log_check_result
from app.checks.fold_checks import FoldValidator
from app.config import EncoderConfig, TrainConfig
from app.datasets.checkpoint import Checkpoint
from app.models import LowDataReport, LowDataRow, WindowSet
from app.seeding import derive_rng
from app.training.loso import evaluate_loso

log = logging.getLogger(__name__)

_fold_checks = FoldValidator()
DEFAULT_SIZES: list[int | None] = [1, 50, 100, 500, 1000]


def sample_per_class(data: WindowSet, size: int, rng: np.random.Generator) -> WindowSet:
    """Up to ``size`` windows of every class present, drawn without replacement, original order kept."""
    picks = []
    for cls in np.unique(data.labels):
        idx = np.flatnonzero(data.labels == cls)
        if len(idx) < size:
            log_check_result(
                _fold_checks.check(kind="lowdata_size", available=len(idx), requested=size, class_id=int(cls)),
                log,
            )
        picks.append(rng.choice(idx, size=min(size, len(idx)), replace=False))
    return data.subset(np.sort(np.concatenate(picks)))


def run_low_data_study(
    data: WindowSet,
    n_classes: int,
    cfg: TrainConfig,
    enc_cfg: EncoderConfig | None = None,
    checkpoint: Checkpoint | None = None,
    sizes: list[int | None] | None = None,
    repeats: int = 50,
    jobs: int = 1,
    config_hash: str = "",
) -> LowDataReport:
    """Mean ± std over repeats of the LOSO mean, per size. ``None`` is the full training fold.

    ``config_hash`` is the run config's hash; it lands on the report and on every LOSO pass.
    """
    rows: list[LowDataRow] = []
    for size in sizes if sizes is not None else DEFAULT_SIZES:
        n_rep = 1 if size is None else repeats
        accs, f1s = [], []
        for r in range(n_rep):
            train_filter = None
            if size is not None:
                def train_filter(train: WindowSet, fold_idx: int, _size=size, _r=r) -> WindowSet:
                    return sample_per_class(train, _size, derive_rng(cfg.seed, 7, _size, _r, fold_idx))
            report = evaluate_loso(
                data, n_classes, cfg, enc_cfg, checkpoint,
                jobs=jobs, train_filter=train_filter, config_hash=config_hash,
            )
            accs.append(report.mean_accuracy)
            f1s.append(report.mean_f1)
        rows.append(
            LowDataRow(
                size=size,
                mean_accuracy=float(np.mean(accs)),
                std_accuracy=float(np.std(accs)),
                mean_f1=float(np.mean(f1s)),
                std_f1=float(np.std(f1s)),
                repeats=n_rep,
            )
        )
        log.info("Low-data size %s: accuracy=%.4f±%.4f (%d repeats)", size or "full", rows[-1].mean_accuracy,
                 rows[-1].std_accuracy, n_rep)
    return LowDataReport(rows=rows, seed=cfg.seed, config_hash=config_hash)
