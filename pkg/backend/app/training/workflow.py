"""Stage glue shared by the CLI and the ablation harness.

manifest → windows → (pretext set → pretrained checkpoint) → labelled set → LOSO
"""

from __future__ import annotations

import logging
from dataclasses import replace

from app.augment.pretext import build_pretext_dataset
from app.config import EncoderConfig, RunConfig
from app.datasets.loader import load_dataset
from app.datasets.manifest import DatasetManifest, TaskDefinition
from app.dsp.pipeline import preprocess_dataset
from app.dsp.windowing import label_windows
from app.errors import InputError
from app.models import PretextSet, Window, WindowSet
from app.training.pretrain import PretrainResult, pretrain, split_by_subject

log = logging.getLogger(__name__)


def prepare_windows(manifest: DatasetManifest, run: RunConfig, jobs: int = 1) -> list[Window]:
    """Load, filter, normalise, resample and segment every subject of a manifest."""
    pp = run.preprocess_config(manifest.preprocess_config())
    recordings = load_dataset(manifest, jobs=jobs)
    windows = preprocess_dataset(recordings, pp, jobs=jobs)
    log.info("Dataset %s: %d windows of %d samples", manifest.dataset_id, len(windows), pp.window_len)
    return windows


def labelled_set(windows: list[Window], task: TaskDefinition) -> WindowSet:
    labelled = label_windows(windows, task.label_map, task.track)
    if not labelled:
        raise InputError(f"task {task.id}: no window carries a mapped '{task.track}' label")
    return WindowSet.from_windows(labelled)


def select_window_columns(windows: list[Window], columns: list[int] | None) -> list[Window]:
    if columns is None:
        return windows
    return [replace(w, values=w.values[:, columns]) for w in windows]


def build_pretext_set(windows: list[Window], run: RunConfig, jobs: int = 1) -> PretextSet:
    tcfg = run.transform_config()
    samples = build_pretext_dataset(windows, tcfg, run.seed, jobs=jobs)
    return PretextSet.from_samples(samples, tcfg.label_names)


def encoder_for(run: RunConfig, values_shape: tuple[int, ...]) -> EncoderConfig:
    """Encoder config sized to ``[*, N, M]`` data."""
    return run.encoder_config(window_len=int(values_shape[1]), n_modalities=int(values_shape[2]))


def pretrain_run(pset: PretextSet, run: RunConfig) -> PretrainResult:
    train, holdout = split_by_subject(pset, run.pretext_holdout_frac, run.seed)
    return pretrain(train, encoder_for(run, pset.values.shape), run.pretext_train_config(), holdout=holdout)
