"""Materialised pretext dataset.

A directory with three files:
  meta.yaml    format_version, n_samples, window_len, n_modalities, label_names, seed
  samples.bin  little-endian float32, sample after sample, each row-major [N × M]
  index.csv    sample_id, window_id, subject_id, label_EDA, label_BVP, label_TEMP
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from filelock import FileLock

from app.config import MODALITY_NAMES
from app.errors import InputError
from app.models import PretextSet

log = logging.getLogger(__name__)

STORE_VERSION = 1
SAMPLE_DTYPE = np.dtype("<f4")


def save_pretext_dataset(pset: PretextSet, out_dir: str | Path, seed: int = 0) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_samples, window_len, n_modalities = pset.values.shape
    names = MODALITY_NAMES[:n_modalities]

    meta = {
        "format_version": STORE_VERSION,
        "n_samples": int(n_samples),
        "window_len": int(window_len),
        "n_modalities": int(n_modalities),
        "modalities": list(names),
        "label_names": list(pset.label_names),
        "dtype": SAMPLE_DTYPE.str,
        "seed": int(seed),
    }
    index = pd.DataFrame({
        "sample_id": np.arange(n_samples),
        "window_id": pset.window_ids,
        "subject_id": pset.subject_ids.astype(str),
    })
    for m, name in enumerate(names):
        index[f"label_{name}"] = pset.labels[:, m]

    with FileLock(str(out_dir / "meta.yaml") + ".lock"):
        np.ascontiguousarray(pset.values, dtype=SAMPLE_DTYPE).tofile(out_dir / "samples.bin")
        index.to_csv(out_dir / "index.csv", index=False, lineterminator="\n")
        (out_dir / "meta.yaml").write_text(yaml.safe_dump(meta, sort_keys=False), encoding="utf-8")
    log.info("Saved %d pretext samples to %s", n_samples, out_dir)
    return out_dir


def load_pretext_dataset(path: str | Path) -> PretextSet:
    path = Path(path)
    meta_path = path / "meta.yaml"
    if not meta_path.exists():
        raise InputError(f"pretext store not found: {path}")
    meta = yaml.safe_load(meta_path.read_text(encoding="utf-8"))
    if meta.get("format_version") != STORE_VERSION:
        raise InputError(f"{meta_path}: unsupported format_version {meta.get('format_version')}")

    n, length, width = meta["n_samples"], meta["window_len"], meta["n_modalities"]
    raw = np.fromfile(path / "samples.bin", dtype=np.dtype(meta.get("dtype", SAMPLE_DTYPE.str)))
    if raw.size != n * length * width:
        raise InputError(f"{path / 'samples.bin'}: holds {raw.size} values, meta declares {n}×{length}×{width}")

    index = pd.read_csv(path / "index.csv", dtype={"subject_id": str})
    if len(index) != n:
        raise InputError(f"{path / 'index.csv'}: {len(index)} rows, meta declares {n}")
    label_cols = [f"label_{name}" for name in meta["modalities"]]
    return PretextSet(
        values=raw.reshape(n, length, width).astype(np.float64),
        labels=index[label_cols].to_numpy(dtype=np.int64),
        window_ids=index["window_id"].to_numpy(dtype=np.int64),
        subject_ids=index["subject_id"].to_numpy(dtype=object),
        label_names=list(meta["label_names"]),
    )
