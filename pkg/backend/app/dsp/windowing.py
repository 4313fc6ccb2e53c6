"""Window segmentation and window labelling."""

from __future__ import annotations

import logging

import numpy as np

from app.checks.base import log_check_result
from app.checks.fold_checks import FoldValidator
from app.dsp.filters import resize_linear
from app.errors import InputError
from app.models import MODALITIES, PipelineStage, Recording, Window

log = logging.getLogger(__name__)

_fold_checks = FoldValidator()


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def window_step(window_len: int, overlap_frac: float) -> int:
    """Hop size in samples; at least one sample even for near-total overlap."""
    return max(1, _round_half_up((1.0 - overlap_frac) * window_len))


def window_count(length: int, window_len: int, step: int) -> int:
    if length < window_len:
        return 0
    return (length - window_len) // step + 1


def majority_label(labels_in_window: np.ndarray | list[int]) -> int:
    """Most frequent class id; ties go to the smallest id."""
    labels = np.asarray(labels_in_window, dtype=np.int64)
    if labels.size == 0:
        raise InputError("majority_label needs at least one label")
    classes, counts = np.unique(labels, return_counts=True)
    # np.unique sorts ascending, so argmax picks the smallest id among ties
    return int(classes[np.argmax(counts)])


def _window_raw_labels(recording: Recording, t0: float, window_s: float) -> dict[str, int | None]:
    out: dict[str, int | None] = {}
    for track, rows in recording.labels.items():
        if rows.size == 0:
            out[track] = None
            continue
        inside = (rows[:, 0] >= t0) & (rows[:, 0] < t0 + window_s)
        out[track] = majority_label(rows[inside, 1]) if inside.any() else None
    return out


def segment_windows(recording: Recording, window_s: float, overlap_frac: float) -> list[Window]:
    """Left-aligned sliding windows over a resampled recording.

    The trailing partial window is discarded. A recording shorter than one
    window yields an empty list and a ``short_recording`` warning.
    """
    if recording.stage != PipelineStage.RESAMPLED:
        raise InputError(f"segment_windows expects a resampled recording, got stage '{recording.stage.value}'")
    rates = {s.fs for s in recording.streams.values()}
    if len(rates) != 1:
        raise InputError(f"streams must share one sampling rate before segmentation, got {sorted(rates)}")
    fs = rates.pop()

    window_len = _round_half_up(window_s * fs)
    length = min(len(s.samples) for s in recording.streams.values())
    result = _fold_checks.check(kind="segmentation", length=length, window_len=window_len, subject_id=recording.subject_id)
    if not result.passed:
        log_check_result(result, log)
        return []

    step = window_step(window_len, overlap_frac)
    matrix = np.column_stack([recording.streams[m].samples[:length] for m in MODALITIES])
    windows: list[Window] = []
    for i in range(window_count(length, window_len, step)):
        start = i * step
        t0 = start / fs
        windows.append(
            Window(
                values=matrix[start:start + window_len].copy(),
                subject_id=recording.subject_id,
                t_start=t0,
                raw_labels=_window_raw_labels(recording, t0, window_s),
                window_id=i,
            )
        )
    return windows


def segment_windows_native(recording: Recording, window_s: float, overlap_frac: float, target_fs: float) -> list[Window]:
    """Window each stream at its native rate on a shared time grid, then resize to N samples."""
    if recording.stage != PipelineStage.NORMALIZED:
        raise InputError(f"native-rate segmentation expects a normalised recording, got stage '{recording.stage.value}'")
    window_len = _round_half_up(window_s * target_fs)
    hop_s = window_step(window_len, overlap_frac) / target_fs
    duration = recording.duration_s()
    if duration < window_s:
        log_check_result(
            _fold_checks.check(
                kind="segmentation",
                length=int(duration * target_fs),
                window_len=window_len,
                subject_id=recording.subject_id,
            ),
            log,
        )
        return []

    n_windows = int(np.floor((duration - window_s) / hop_s + 1e-9)) + 1
    windows: list[Window] = []
    for i in range(n_windows):
        t0 = i * hop_s
        cols = []
        for m in MODALITIES:
            stream = recording.streams[m]
            native_len = _round_half_up(window_s * stream.fs)
            # rounding can push the last window one sample past the stream
            start = max(0, min(_round_half_up(t0 * stream.fs), len(stream.samples) - native_len))
            cols.append(resize_linear(stream.samples[start:start + native_len], window_len))
        windows.append(
            Window(
                values=np.column_stack(cols),
                subject_id=recording.subject_id,
                t_start=t0,
                raw_labels=_window_raw_labels(recording, t0, window_s),
                window_id=i,
            )
        )
    return windows


def label_windows(windows: list[Window], label_map: dict[int, int], track: str = "class") -> list[Window]:
    """Attach task class ids; windows without a mapped majority label are dropped."""
    out: list[Window] = []
    dropped = 0
    for w in windows:
        raw = w.raw_labels.get(track)
        if raw is None or raw not in label_map:
            dropped += 1
            continue
        out.append(
            Window(
                values=w.values,
                subject_id=w.subject_id,
                t_start=w.t_start,
                label=int(label_map[raw]),
                raw_labels=w.raw_labels,
                window_id=w.window_id,
            )
        )
    if dropped:
        log.debug("Dropped %d of %d windows without a mapped '%s' label", dropped, len(windows), track)
    return out
