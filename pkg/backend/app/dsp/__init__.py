"""Deterministic signal conditioning.

Stages run in a fixed order, tracked by ``Recording.stage``:
  filter (Butterworth, zero-phase) → z-score → resample → segment

See pipeline.preprocess_dataset() for the end-to-end entry point.
"""

from app.dsp.filters import butterworth_lowpass, resample_to, zscore_normalize
from app.dsp.pipeline import preprocess_dataset, preprocess_recording
from app.dsp.windowing import label_windows, majority_label, segment_windows, window_count

__all__ = [
    "butterworth_lowpass",
    "zscore_normalize",
    "resample_to",
    "segment_windows",
    "window_count",
    "majority_label",
    "label_windows",
    "preprocess_recording",
    "preprocess_dataset",
]
