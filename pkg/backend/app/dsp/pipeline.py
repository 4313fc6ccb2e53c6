"""End-to-end preprocessing: filter → z-score → resample → segment."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from app.config import PreprocessConfig
from app.dsp.filters import butterworth_lowpass, resample_to, zscore_normalize
from app.dsp.windowing import segment_windows, segment_windows_native
from app.errors import InputError
from app.models import PipelineStage, Recording, Stream, Window

log = logging.getLogger(__name__)


def _require_stage(recording: Recording, expected: PipelineStage, step: str) -> None:
    if recording.stage != expected:
        raise InputError(
            f"{step} expects a '{expected.value}' recording, got '{recording.stage.value}' (subject {recording.subject_id})"
        )


def filter_recording(recording: Recording, cfg: PreprocessConfig) -> Recording:
    _require_stage(recording, PipelineStage.RAW, "filter")
    streams = {
        m: Stream(butterworth_lowpass(s.samples, s.fs, cfg.cutoffs[m.value], cfg.filter_order), s.fs)
        for m, s in recording.streams.items()
    }
    return recording.with_streams(streams, PipelineStage.FILTERED)


def normalize_recording(recording: Recording) -> Recording:
    _require_stage(recording, PipelineStage.FILTERED, "z-score")
    streams = {m: Stream(zscore_normalize(s.samples), s.fs) for m, s in recording.streams.items()}
    return recording.with_streams(streams, PipelineStage.NORMALIZED)


def resample_recording(recording: Recording, target_fs: float) -> Recording:
    _require_stage(recording, PipelineStage.NORMALIZED, "resample")
    streams = {m: Stream(resample_to(s.samples, s.fs, target_fs), target_fs) for m, s in recording.streams.items()}
    return recording.with_streams(streams, PipelineStage.RESAMPLED)


def preprocess_recording(recording: Recording, cfg: PreprocessConfig) -> Recording:
    """Filter, normalise and (when segmenting post-resample) downsample one recording."""
    rec = normalize_recording(filter_recording(recording, cfg))
    if cfg.segment_after_resample:
        rec = resample_recording(rec, cfg.target_fs)
    return rec


def _windows_for(recording: Recording, cfg: PreprocessConfig) -> list[Window]:
    rec = preprocess_recording(recording, cfg)
    if cfg.segment_after_resample:
        return segment_windows(rec, cfg.window_s, cfg.overlap_frac)
    return segment_windows_native(rec, cfg.window_s, cfg.overlap_frac, cfg.target_fs)


def preprocess_dataset(recordings: list[Recording], cfg: PreprocessConfig, jobs: int = 1) -> list[Window]:
    """Windows for every recording, in recording order, with dataset-wide window ids."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            per_recording = list(executor.map(lambda r: _windows_for(r, cfg), recordings))
    else:
        per_recording = [_windows_for(r, cfg) for r in recordings]

    windows: list[Window] = []
    for rec, rec_windows in zip(recordings, per_recording):
        log.info("Subject %s: %d windows", rec.subject_id, len(rec_windows))
        for w in rec_windows:
            windows.append(replace(w, window_id=len(windows)))
    return windows
