"""Shared fixtures for the test harness.

Ensures the backend package is importable and provides small models and
a synthetic corpus sized for CPU test runs.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Make backend/app importable
BACKEND_DIR = Path(__file__).resolve().parent.parent / "backend"
if str(BACKEND_DIR) not in sys.path:
    sys.path.insert(0, str(BACKEND_DIR))


# ── Configs ───────────────────────────────────────────────────────────────

@pytest.fixture
def tiny_encoder_cfg():
    """A few hundred parameters: N=16, d=8, one head, kernel 3."""
    from app.config import EncoderConfig

    return EncoderConfig(
        d_embed=8,
        tcn_filters=4,
        tcn_kernel=3,
        tcn_dilations=(1, 2),
        tcn_paddings=None,
        n_heads=1,
        ff_dim=8,
        window_len=16,
        pretext_hidden=8,
        emotion_hidden=8,
    )


@pytest.fixture
def tiny_run_overrides() -> dict:
    """RunConfig keys that shrink the encoder and the training schedule."""
    return {
        "d_embed": 8,
        "tcn_filters": 4,
        "tcn_kernel": 3,
        "n_heads": 1,
        "ff_dim": 8,
        "pretext_epochs": 1,
        "pretext_batch_size": 16,
        "epochs": 2,
        "batch_size": 16,
        "lr": 0.01,
    }


# ── Data ──────────────────────────────────────────────────────────────────

def make_window_set(n_subjects: int = 3, per_class: int = 8, n_classes: int = 2, length: int = 16, seed: int = 0):
    """Labelled windows whose class sets the mean level of every modality."""
    from app.models import WindowSet

    rng = np.random.default_rng(seed)
    values, labels, subjects = [], [], []
    for s in range(n_subjects):
        for c in range(n_classes):
            for _ in range(per_class):
                level = -1.0 + 2.0 * c / max(n_classes - 1, 1)
                values.append(level + 0.3 * rng.standard_normal((length, 3)))
                labels.append(c)
                subjects.append(f"S{s + 1:02d}")
    n = len(labels)
    return WindowSet(
        values=np.array(values),
        labels=np.array(labels, dtype=np.int64),
        subject_ids=np.array(subjects, dtype=object),
        t_start=np.zeros(n),
        window_ids=np.arange(n, dtype=np.int64),
    )


@pytest.fixture
def window_set_factory():
    return make_window_set


@pytest.fixture
def level_windows():
    return make_window_set()


@pytest.fixture
def synthetic_manifest(tmp_path):
    """Three 6-minute subjects written to disk; returns the manifest path."""
    from app.datasets.synthetic import generate_synthetic_corpus, write_corpus

    recordings, manifest = generate_synthetic_corpus(n_subjects=3, seconds_per_subject=360, n_classes=2, seed=3)
    return write_corpus(recordings, manifest, tmp_path / "corpus")
