"""Window store — preprocessed windows as one ``.npz`` file.

Arrays: ``values [W, N, M]``, ``labels [W]`` (-1 = unlabelled), ``subject_ids``,
``t_start``, ``window_ids`` and one ``raw__<track>`` array per label track
(-1 where the window had no label samples).
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from filelock import FileLock

from app.errors import InputError
from app.models import Window

log = logging.getLogger(__name__)

_RAW_PREFIX = "raw__"


def save_windows(windows: list[Window], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tracks = sorted({t for w in windows for t in w.raw_labels})
    arrays = {
        "values": np.stack([w.values for w in windows]).astype(np.float64) if windows else np.zeros((0, 0, 0)),
        "labels": np.array([-1 if w.label is None else w.label for w in windows], dtype=np.int64),
        "subject_ids": np.array([w.subject_id for w in windows], dtype=np.str_),
        "t_start": np.array([w.t_start for w in windows], dtype=np.float64),
        "window_ids": np.array([w.window_id for w in windows], dtype=np.int64),
    }
    for track in tracks:
        raw = [w.raw_labels.get(track) for w in windows]
        arrays[_RAW_PREFIX + track] = np.array([-1 if v is None else v for v in raw], dtype=np.int64)

    with FileLock(str(path) + ".lock"):
        with open(path, "wb") as f:
            np.savez(f, **arrays)
    log.info("Saved %d windows to %s", len(windows), path)
    return path


def load_windows(path: str | Path) -> list[Window]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"window store not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        missing = {"values", "labels", "subject_ids", "t_start", "window_ids"} - set(data.files)
        if missing:
            raise InputError(f"{path}: missing arrays {sorted(missing)}")
        values = data["values"]
        labels = data["labels"]
        subject_ids = data["subject_ids"]
        t_start = data["t_start"]
        window_ids = data["window_ids"]
        raw = {k[len(_RAW_PREFIX):]: data[k] for k in data.files if k.startswith(_RAW_PREFIX)}

    return [
        Window(
            values=values[i],
            subject_id=str(subject_ids[i]),
            t_start=float(t_start[i]),
            label=None if labels[i] < 0 else int(labels[i]),
            raw_labels={track: (None if arr[i] < 0 else int(arr[i])) for track, arr in raw.items()},
            window_id=int(window_ids[i]),
        )
        for i in range(len(labels))
    ]
