"""Manifest → Recordings. Signal files are CSV ``t_sec,value``; label files ``t_sec,label``."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from app.checks.base import log_check_result, raise_if_blocked
from app.checks.signal_checks import ModalityCoverageCheck, SignalValidator
from app.config import MODALITY_NAMES
from app.datasets.manifest import DatasetManifest, SubjectEntry, load_manifest
from app.errors import InputError
from app.models import MODALITIES, Recording, Stream

log = logging.getLogger(__name__)

_signal_check = SignalValidator()
_coverage_check = ModalityCoverageCheck()


def read_two_column_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Both columns as float64; unparsable cells become NaN and are reported by line."""
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise InputError(f"{path}: malformed CSV: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise InputError(f"{path}: empty file") from e
    if frame.shape[1] != 2:
        raise InputError(f"{path}: expected 2 columns, found {frame.shape[1]}")

    cols = []
    for name in frame.columns:
        values = pd.to_numeric(frame[name].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
        result = _signal_check.check(samples=values, source=f"{path}")
        log_check_result(result, log)
        raise_if_blocked(result)
        cols.append(values)
    return cols[0], cols[1]


def infer_rate(t_sec: np.ndarray, source: str = "") -> float:
    """Sampling rate from the median timestamp spacing."""
    if len(t_sec) < 2:
        raise InputError(f"{source}: need at least two samples to infer the sampling rate")
    dt = float(np.median(np.diff(t_sec)))
    if dt <= 0:
        raise InputError(f"{source}: timestamps must increase")
    return round(1.0 / dt, 6)


def _load_subject(entry: SubjectEntry, manifest: DatasetManifest) -> Recording:
    result = _coverage_check.check(present=entry.files.keys(), required=MODALITY_NAMES, subject_id=entry.id)
    raise_if_blocked(result)

    streams: dict = {}
    for modality in MODALITIES:
        path = manifest.resolve(entry.files[modality.value])
        t_sec, values = read_two_column_csv(path)
        if manifest.native_fs and modality.value in manifest.native_fs:
            fs = float(manifest.native_fs[modality.value])
        else:
            fs = infer_rate(t_sec, str(path))
        result = _signal_check.check(samples=values, fs=fs, source=str(path))
        raise_if_blocked(result)
        streams[modality] = Stream(values, fs)

    labels: dict[str, np.ndarray] = {}
    for track, rel in entry.labels.items():
        path = manifest.resolve(rel)
        t_sec, raw = read_two_column_csv(path)
        if np.any(raw != np.round(raw)):
            raise InputError(f"{path}: label values must be integers")
        _check_task_coverage(manifest, track, raw, path)
        labels[track] = np.column_stack([t_sec, raw.astype(np.int64)]).astype(np.float64)

    return Recording(subject_id=entry.id, streams=streams, labels=labels)


def _check_task_coverage(manifest: DatasetManifest, track: str, raw: np.ndarray, path: Path) -> None:
    for task in manifest.tasks:
        if task.track != track:
            continue
        unmapped = sorted({int(v) for v in np.unique(raw)} - set(task.label_map) - set(task.ignore))
        if unmapped:
            raise InputError(f"{path}: task {task.id} has no mapping for label values {unmapped}")


def load_dataset(manifest: DatasetManifest | str | Path, jobs: int = 1) -> list[Recording]:
    """Load every subject listed in the manifest, in manifest order."""
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(manifest)
    entries = manifest.subjects
    if jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            recordings = list(executor.map(lambda e: _load_subject(e, manifest), entries))
    else:
        recordings = [_load_subject(e, manifest) for e in entries]
    log.info("Loaded %d recordings from dataset %s", len(recordings), manifest.dataset_id)
    return recordings
