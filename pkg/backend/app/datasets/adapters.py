"""Converters from public dataset layouts into manifest + CSV form.

WESAD ships one pickle per subject (``S2/S2.pkl``) holding the wrist
(Empatica E4) streams and a 700 Hz protocol label track:
1 baseline, 2 stress, 3 amusement; other values are transitions or
meditation and are ignored by both tasks.

CASE and K-EmoCon carry continuous valence/arousal annotations; the
manifest templates in ``manifests/`` expect them already binned with
``bin_continuous`` into low/high or low/medium/high classes.
"""

from __future__ import annotations

import logging
import pickle
from pathlib import Path

import numpy as np
import pandas as pd
from filelock import FileLock

from app.config import CUTOFF_PRESETS, OVERLAP_PRESETS
from app.datasets.manifest import DatasetManifest, SubjectEntry, TaskDefinition
from app.errors import InputError

log = logging.getLogger(__name__)

WESAD_FS = {"EDA": 4.0, "BVP": 64.0, "TEMP": 4.0}
WESAD_LABEL_FS = 700.0
WESAD_LABEL_RATE_OUT = 4.0
WESAD_IGNORED = [0, 4, 5, 6, 7]

WESAD_TASKS = [
    TaskDefinition(id="stress2", n_classes=2, track="class", label_map={1: 0, 3: 0, 2: 1}, ignore=WESAD_IGNORED),
    TaskDefinition(id="emotion3", n_classes=3, track="class", label_map={1: 0, 2: 1, 3: 2}, ignore=WESAD_IGNORED),
]


def _write_series(path: Path, t: np.ndarray, values: np.ndarray, column: str, integer: bool = False) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"t_sec": t, column: values.astype(np.int64) if integer else values})
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


def convert_wesad(src_dir: str | Path, out_dir: str | Path, subjects: list[str] | None = None) -> Path:
    """Convert ``<src_dir>/S*/S*.pkl`` into CSVs plus ``manifest.yaml``; returns the manifest path."""
    src_dir, out_dir = Path(src_dir), Path(out_dir)
    pickles = sorted(src_dir.glob("S*/S*.pkl"), key=lambda p: int(p.stem[1:]) if p.stem[1:].isdigit() else p.stem)
    if subjects:
        pickles = [p for p in pickles if p.stem in subjects]
    if not pickles:
        raise InputError(f"no WESAD subject pickles under {src_dir}")

    entries: list[SubjectEntry] = []
    for pkl in pickles:
        sid = pkl.stem
        with open(pkl, "rb") as f:
            data = pickle.load(f, encoding="latin1")
        wrist = data["signal"]["wrist"]
        files = {}
        for modality, fs in WESAD_FS.items():
            values = np.asarray(wrist[modality], dtype=np.float64).reshape(-1)
            rel = f"{sid}/{modality}.csv"
            _write_series(out_dir / rel, np.arange(len(values)) / fs, values, "value")
            files[modality] = rel

        labels = np.asarray(data["label"]).reshape(-1)
        n_out = int(len(labels) / WESAD_LABEL_FS * WESAD_LABEL_RATE_OUT)
        t_out = np.arange(n_out) / WESAD_LABEL_RATE_OUT
        idx = np.minimum(np.floor(t_out * WESAD_LABEL_FS + 0.5).astype(np.int64), len(labels) - 1)
        _write_series(out_dir / f"{sid}/labels.csv", t_out, labels[idx], "label", integer=True)

        entries.append(SubjectEntry(id=sid, files=files, labels={"class": f"{sid}/labels.csv"}))
        log.info("Converted WESAD subject %s", sid)

    manifest = DatasetManifest(
        dataset_id="wesad",
        overlap_frac=OVERLAP_PRESETS["wesad"],
        cutoffs=dict(CUTOFF_PRESETS["wesad"]),
        native_fs=dict(WESAD_FS),
        preset="wesad",
        subjects=entries,
        tasks=WESAD_TASKS,
    )
    path = out_dir / "manifest.yaml"
    with FileLock(str(path) + ".lock"):
        path.write_text(manifest.to_yaml(), encoding="utf-8")
    return path


def scale_thresholds(low: float, high: float, n_bins: int) -> list[float]:
    """Equal-width bin edges over an annotation scale (e.g. 1–9 → [5.0] for 2 bins)."""
    if n_bins < 2:
        raise InputError("n_bins must be >= 2")
    return [low + (high - low) * k / n_bins for k in range(1, n_bins)]


def bin_continuous(values: np.ndarray, thresholds: list[float]) -> np.ndarray:
    """Class ids 0..len(thresholds) for continuous annotations; a value on an edge goes up."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InputError("annotations contain non-finite values")
    if list(thresholds) != sorted(thresholds):
        raise InputError("thresholds must be ascending")
    return np.digitize(values, thresholds).astype(np.int64)
