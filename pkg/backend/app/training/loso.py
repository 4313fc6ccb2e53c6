"""Leave-one-subject-out evaluation.

Fold k holds out the k-th subject (sorted by id) and trains on the rest.
Each fold trains with seed ``derive_seed(seed, k)`` on one intra-op thread,
so the numbers are the same whether folds run serially or in worker
processes (``jobs > 1``).

Hooks, both applied in the parent process before a fold is dispatched:
  train_filter(train, fold_idx) -> train          e.g. low-data subsampling
  fold_transform(train, test, fold_idx) -> (train, test)   e.g. modality masking
"""

from __future__ import annotations

import logging
import multiprocessing
import time
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from app.checks.base import log_check_result
from app.checks.fold_checks import FoldValidator
from app.config import EncoderConfig, TrainConfig
from app.datasets.checkpoint import Checkpoint
from app.errors import InputError
from app.models import FoldResult, MetricsReport, WindowSet
from app.seeding import derive_seed, single_threaded
from app.training.downstream import predict, train_downstream
from app.training.metrics import compute_metrics

log = logging.getLogger(__name__)

_fold_checks = FoldValidator()

TrainFilter = Callable[[WindowSet, int], WindowSet]
FoldTransform = Callable[[WindowSet, WindowSet, int], tuple[WindowSet, WindowSet]]


def loso_splits(data: WindowSet) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """(held-out subject, train indices, test indices) per subject, sorted by subject id."""
    splits = []
    for subject in data.subjects():
        test_mask = data.subject_ids == subject
        splits.append((subject, np.flatnonzero(~test_mask), np.flatnonzero(test_mask)))
    return splits


def _run_fold(
    subject: str,
    fold_idx: int,
    train: WindowSet,
    test: WindowSet,
    n_classes: int,
    cfg: TrainConfig,
    enc_cfg: EncoderConfig | None,
    checkpoint: Checkpoint | None,
    flags: list[str],
) -> FoldResult:
    with single_threaded():
        result = train_downstream(checkpoint, train, n_classes, cfg, enc_cfg, subject_id=subject)
        preds = predict(result.model, test.values)
    accuracy, f1 = compute_metrics(preds, test.labels, average=cfg.f1_average)
    log.info("Fold %d (%s): accuracy=%.4f f1=%.4f", fold_idx + 1, subject, accuracy, f1)
    return FoldResult(
        subject_id=subject,
        accuracy=accuracy,
        f1=f1,
        n_test=len(test),
        flags=sorted(set(flags + result.flags)),
    )


def evaluate_loso(
    data: WindowSet,
    n_classes: int,
    cfg: TrainConfig,
    enc_cfg: EncoderConfig | None = None,
    checkpoint: Checkpoint | None = None,
    jobs: int = 1,
    train_filter: TrainFilter | None = None,
    fold_transform: FoldTransform | None = None,
    **provenance,
) -> MetricsReport:
    if np.any(data.labels < 0):
        raise InputError("LOSO evaluation needs labelled windows only")
    subjects = data.subjects()
    if len(subjects) < 2:
        raise InputError(f"LOSO needs at least 2 subjects, got {len(subjects)}")

    started = time.perf_counter()
    jobs_args = []
    for fold_idx, (subject, train_idx, test_idx) in enumerate(loso_splits(data)):
        train, test = data.subset(train_idx), data.subset(test_idx)
        if train_filter is not None:
            train = train_filter(train, fold_idx)
        if fold_transform is not None:
            train, test = fold_transform(train, test, fold_idx)
        if subject in set(train.subject_ids.tolist()):
            raise InputError(f"fold {fold_idx + 1}: held-out subject {subject} leaked into the training set")

        flags = []
        check = _fold_checks.check(kind="test_fold", labels=test.labels, subject_id=subject)
        if not check.passed:
            log_check_result(check, log)
            flags.append(check.check_name)

        fold_cfg = cfg.model_copy(update={"seed": derive_seed(cfg.seed, fold_idx)})
        jobs_args.append((subject, fold_idx, train, test, n_classes, fold_cfg, enc_cfg, checkpoint, flags))

    if jobs > 1:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as executor:
            futures = [executor.submit(_run_fold, *args) for args in jobs_args]
            folds = [f.result() for f in futures]
    else:
        folds = [_run_fold(*args) for args in jobs_args]

    report = MetricsReport.from_folds(
        folds,
        task_id=provenance.pop("task_id", cfg.task_id),
        mode=provenance.pop("mode", cfg.mode),
        dataset_id=provenance.pop("dataset_id", cfg.dataset_id),
        seed=cfg.seed,
        wall_time_s=time.perf_counter() - started,
        **provenance,
    )
    log.info(
        "LOSO over %d subjects: accuracy=%.4f±%.4f f1=%.4f±%.4f",
        len(folds), report.mean_accuracy, report.std_accuracy, report.mean_f1, report.std_f1,
    )
    return report
