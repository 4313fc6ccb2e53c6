"""Synthetic wrist-sensor corpus for tests and desk-scale runs.

Each subject gets three pseudo-physiological streams at the E4 native rates
(EDA 4 Hz, BVP 64 Hz, TEMP 4 Hz). The class label changes every
``segment_s`` seconds and sets the oscillation frequency (and, slightly, the
amplitude) of every stream, on top of a slow drift, a subject offset and
Gaussian noise. The same seed always yields byte-identical files.

Usage:
    recordings, manifest = generate_synthetic_corpus(n_subjects=4, seconds_per_subject=900, n_classes=2, seed=7)
    write_corpus(recordings, manifest, out_dir)
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from filelock import FileLock

from app.config import CUTOFF_PRESETS
from app.datasets.manifest import DatasetManifest, SubjectEntry, TaskDefinition
from app.errors import InputError
from app.models import MODALITIES, Modality, Recording, Stream, Window
from app.seeding import derive_rng

log = logging.getLogger(__name__)

NATIVE_FS: dict[Modality, float] = {Modality.EDA: 4.0, Modality.BVP: 64.0, Modality.TEMP: 4.0}
SEGMENT_S = 180.0
NOISE_STD = 0.1
CSV_FLOAT_FORMAT = "%.6f"

# (base frequency Hz, max class spacing Hz, usable band width Hz) per modality
_FREQ_PLAN: dict[Modality, tuple[float, float, float]] = {
    Modality.EDA: (0.05, 0.10, 0.35),
    Modality.BVP: (1.00, 0.25, 0.90),
    Modality.TEMP: (0.05, 0.10, 0.35),
}


def class_frequency(modality: Modality, class_id: int, n_classes: int) -> float:
    """Oscillation frequency of ``modality`` for ``class_id``; stays below the low-pass cutoffs."""
    base, spacing, band = _FREQ_PLAN[modality]
    step = min(spacing, band / max(n_classes - 1, 1))
    return base + step * class_id


def _label_track(duration_s: float, n_classes: int, subject_idx: int) -> np.ndarray:
    """1 Hz label rows; segments cycle through the classes, shifted per subject."""
    t = np.arange(int(duration_s), dtype=np.float64)
    segment = (t // SEGMENT_S).astype(np.int64)
    labels = (segment + subject_idx) % n_classes
    return np.column_stack([t, labels.astype(np.float64)])


def _stream(
    modality: Modality,
    label_rows: np.ndarray,
    duration_s: float,
    n_classes: int,
    rng: np.random.Generator,
) -> np.ndarray:
    fs = NATIVE_FS[modality]
    t = np.arange(int(round(duration_s * fs))) / fs
    cls = label_rows[np.minimum(t.astype(np.int64), len(label_rows) - 1), 1].astype(np.int64)

    freq = np.array([class_frequency(modality, c, n_classes) for c in range(n_classes)])[cls]
    phase = 2.0 * np.pi * np.cumsum(freq) / fs + rng.uniform(0, 2 * np.pi)
    amplitude = 1.0 + 0.1 * cls

    drift_f = rng.uniform(0.002, 0.005)
    drift = 0.3 * np.sin(2.0 * np.pi * drift_f * t + rng.uniform(0, 2 * np.pi))
    offset = rng.normal(0.0, 1.0)
    noise = rng.normal(0.0, NOISE_STD, size=t.shape)
    return offset + drift + amplitude * np.sin(phase) + noise


def generate_synthetic_corpus(
    n_subjects: int = 4,
    seconds_per_subject: float = 900.0,
    n_classes: int = 2,
    seed: int = 0,
    dataset_id: str = "synthetic",
) -> tuple[list[Recording], DatasetManifest]:
    if n_subjects < 2:
        raise InputError(f"synthetic corpus needs at least 2 subjects, got {n_subjects}")
    if n_classes < 1:
        raise InputError("n_classes must be >= 1")

    recordings: list[Recording] = []
    entries: list[SubjectEntry] = []
    for s in range(n_subjects):
        subject_id = f"S{s + 1:02d}"
        label_rows = _label_track(seconds_per_subject, n_classes, s)
        streams = {}
        for k, modality in enumerate(MODALITIES):
            rng = derive_rng(seed, s, k)
            streams[modality] = Stream(
                _stream(modality, label_rows, seconds_per_subject, n_classes, rng), NATIVE_FS[modality]
            )
        recordings.append(Recording(subject_id=subject_id, streams=streams, labels={"class": label_rows}))
        entries.append(
            SubjectEntry(
                id=subject_id,
                files={m.value: f"{subject_id}/{m.value}.csv" for m in MODALITIES},
                labels={"class": f"{subject_id}/labels.csv"},
            )
        )

    manifest = DatasetManifest(
        dataset_id=dataset_id,
        cutoffs=dict(CUTOFF_PRESETS["wesad"]),
        native_fs={m.value: fs for m, fs in NATIVE_FS.items()},
        subjects=entries,
        tasks=[
            TaskDefinition(
                id=f"class{n_classes}",
                n_classes=n_classes,
                track="class",
                label_map={c: c for c in range(n_classes)},
            )
        ],
    )
    log.info("Generated synthetic corpus: %d subjects × %.0f s, %d classes", n_subjects, seconds_per_subject, n_classes)
    return recordings, manifest


def write_corpus(recordings: list[Recording], manifest: DatasetManifest, out_dir: str | Path) -> Path:
    """Write CSVs and ``manifest.yaml`` under ``out_dir``; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.yaml"
    with FileLock(str(manifest_path) + ".lock"):
        for rec, entry in zip(recordings, manifest.subjects):
            for modality, stream in rec.streams.items():
                t = np.arange(len(stream.samples)) / stream.fs
                path = out_dir / entry.files[modality.value]
                path.parent.mkdir(parents=True, exist_ok=True)
                pd.DataFrame({"t_sec": t, "value": stream.samples}).to_csv(
                    path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"
                )
            for track, rows in rec.labels.items():
                frame = pd.DataFrame({"t_sec": rows[:, 0], "label": rows[:, 1].astype(np.int64)})
                frame.to_csv(
                    out_dir / entry.labels[track], index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"
                )
        manifest_path.write_text(manifest.to_yaml(), encoding="utf-8")
    manifest.with_root(out_dir)
    return manifest_path


# ── Oracle ────────────────────────────────────────────────────────────────

def dominant_frequency(x: np.ndarray, fs: float, band: tuple[float, float]) -> float:
    """Frequency of the largest spectral peak inside ``band`` after removing a linear trend."""
    x = np.asarray(x, dtype=np.float64)
    t = np.arange(len(x))
    x = x - np.polyval(np.polyfit(t, x, 1), t)
    spectrum = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    freqs = np.fft.rfftfreq(len(x), d=1.0 / fs)
    mask = (freqs >= band[0]) & (freqs <= band[1])
    return float(freqs[mask][np.argmax(spectrum[mask])])


def frequency_threshold_predict(
    windows: list[Window],
    fs: float,
    n_classes: int,
    modality: Modality = Modality.EDA,
) -> np.ndarray:
    """Nearest class frequency to each window's dominant frequency on one modality column."""
    col = MODALITIES.index(modality)
    centres = np.array([class_frequency(modality, c, n_classes) for c in range(n_classes)])
    band = (max(centres[0] - 0.03, 0.01), centres[-1] + 0.05)
    preds = []
    for w in windows:
        f = dominant_frequency(w.values[:, col], fs, band)
        preds.append(int(np.argmin(np.abs(centres - f))))
    return np.array(preds, dtype=np.int64)
