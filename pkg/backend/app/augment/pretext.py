"""Pretext dataset builder — one sample per (window, transform label).

With the default same-label scheme every modality of a sample receives the
same transform, so each window expands into ``n_labels`` samples. With
``independent_per_modality`` each modality gets its own balanced label
permutation per window.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from app.augment.transforms import apply_transform
from app.config import TransformConfig
from app.errors import ConfigError, InputError
from app.models import PretextSample, Window
from app.seeding import derive_rng

log = logging.getLogger(__name__)


def _has_zero_power_column(values: np.ndarray) -> bool:
    return bool(np.any(np.mean(values**2, axis=0) == 0.0))


def _expand_window(window: Window, cfg: TransformConfig, seed: int) -> list[PretextSample]:
    names = cfg.label_names
    n_labels = len(names)
    n_modalities = window.values.shape[1]

    if cfg.independent_per_modality:
        perm_rng = derive_rng(seed, window.window_id)
        label_table = np.stack([perm_rng.permutation(n_labels) for _ in range(n_modalities)], axis=1)
    else:
        label_table = np.repeat(np.arange(n_labels)[:, None], n_modalities, axis=1)

    samples: list[PretextSample] = []
    for j in range(n_labels):
        rng = derive_rng(seed, window.window_id, j)
        labels = tuple(int(v) for v in label_table[j])
        cols = [apply_transform(names[labels[m]], window.values[:, m], cfg, rng) for m in range(n_modalities)]
        samples.append(
            PretextSample(
                values=np.column_stack(cols),
                transform_labels=labels,
                source_window_id=window.window_id,
                subject_id=window.subject_id,
            )
        )
    return samples


def build_pretext_dataset(
    windows: list[Window],
    cfg: TransformConfig,
    seed: int,
    jobs: int = 1,
) -> list[PretextSample]:
    """Expand windows into transformation-labelled samples.

    Sample content depends only on (seed, window_id, label), never on
    iteration order or ``jobs``.
    """
    if not windows:
        raise InputError("build_pretext_dataset needs at least one window")
    if not isinstance(cfg, TransformConfig):
        raise ConfigError("cfg must be a TransformConfig")

    usable = windows
    if "noise" in cfg.enabled:
        usable = [w for w in windows if not _has_zero_power_column(w.values)]
        skipped = len(windows) - len(usable)
        if skipped:
            log.warning("Skipped %d windows with a zero-power column (noise addition undefined)", skipped)
        if not usable:
            raise InputError("every window has a zero-power column")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            expanded = list(executor.map(lambda w: _expand_window(w, cfg, seed), usable))
    else:
        expanded = [_expand_window(w, cfg, seed) for w in usable]

    samples = [s for group in expanded for s in group]
    log.info("Built %d pretext samples from %d windows (%d labels)", len(samples), len(usable), cfg.n_labels)
    return samples
