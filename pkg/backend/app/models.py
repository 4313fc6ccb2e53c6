"""Domain types — shared between preprocessing, training, I/O and the CLI.

Array-carrying records are dataclasses over numpy arrays; report types are
pydantic models so they serialise straight to YAML/CSV.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from app.config import MODALITY_NAMES


# ── Enums ──────────────────────────────────────────────────────────────────

class Modality(str, Enum):
    EDA = "EDA"
    BVP = "BVP"
    TEMP = "TEMP"


MODALITIES: tuple[Modality, ...] = tuple(Modality(m) for m in MODALITY_NAMES)


class PipelineStage(str, Enum):
    RAW = "raw"
    FILTERED = "filtered"
    NORMALIZED = "normalized"
    RESAMPLED = "resampled"


class TrainingStage(str, Enum):
    PRETRAINED = "pretrained"
    FINETUNED = "finetuned"


# ── Signals ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Stream:
    samples: np.ndarray     # 1-D float64
    fs: float               # Hz


@dataclass(frozen=True)
class Recording:
    """One subject's continuous multimodal streams plus optional label tracks.

    ``labels`` maps a track name (e.g. ``"class"``, ``"arousal"``) to a
    ``[K, 2]`` array of ``(t_sec, class_id)`` rows.
    """

    subject_id: str
    streams: dict[Modality, Stream]
    labels: dict[str, np.ndarray] = field(default_factory=dict)
    stage: PipelineStage = PipelineStage.RAW

    def with_streams(self, streams: dict[Modality, Stream], stage: PipelineStage) -> "Recording":
        return replace(self, streams=streams, stage=stage)

    def duration_s(self) -> float:
        return min(len(s.samples) / s.fs for s in self.streams.values())


@dataclass(frozen=True)
class Window:
    """A fixed-length multimodal segment of shape ``[N, M]``."""

    values: np.ndarray
    subject_id: str
    t_start: float
    label: int | None = None
    raw_labels: dict[str, int | None] = field(default_factory=dict)
    window_id: int = 0


@dataclass
class WindowSet:
    """Stacked windows for training: values ``[W, N, M]``, labels ``[W]`` (-1 = none)."""

    values: np.ndarray
    labels: np.ndarray
    subject_ids: np.ndarray
    t_start: np.ndarray
    window_ids: np.ndarray

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def from_windows(cls, windows: list[Window]) -> "WindowSet":
        if not windows:
            return cls(
                values=np.zeros((0, 0, 0)),
                labels=np.zeros(0, dtype=np.int64),
                subject_ids=np.zeros(0, dtype=object),
                t_start=np.zeros(0),
                window_ids=np.zeros(0, dtype=np.int64),
            )
        return cls(
            values=np.stack([w.values for w in windows]).astype(np.float64),
            labels=np.array([-1 if w.label is None else w.label for w in windows], dtype=np.int64),
            subject_ids=np.array([w.subject_id for w in windows], dtype=object),
            t_start=np.array([w.t_start for w in windows], dtype=np.float64),
            window_ids=np.array([w.window_id for w in windows], dtype=np.int64),
        )

    def subset(self, mask_or_index: np.ndarray) -> "WindowSet":
        return WindowSet(
            values=self.values[mask_or_index],
            labels=self.labels[mask_or_index],
            subject_ids=self.subject_ids[mask_or_index],
            t_start=self.t_start[mask_or_index],
            window_ids=self.window_ids[mask_or_index],
        )

    def with_values(self, values: np.ndarray) -> "WindowSet":
        return WindowSet(values, self.labels, self.subject_ids, self.t_start, self.window_ids)

    def select_columns(self, columns: list[int]) -> "WindowSet":
        return self.with_values(self.values[:, :, columns])

    def subjects(self) -> list[str]:
        return sorted(set(self.subject_ids.tolist()))

    def to_windows(self) -> list[Window]:
        return [
            Window(
                values=self.values[i],
                subject_id=str(self.subject_ids[i]),
                t_start=float(self.t_start[i]),
                label=None if self.labels[i] < 0 else int(self.labels[i]),
                window_id=int(self.window_ids[i]),
            )
            for i in range(len(self))
        ]


# ── Pretext samples ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PretextSample:
    values: np.ndarray              # [N, M]
    transform_labels: tuple[int, ...]
    source_window_id: int
    subject_id: str = ""


@dataclass
class PretextSet:
    """Stacked pretext samples: values ``[S, N, M]``, labels ``[S, M]``."""

    values: np.ndarray
    labels: np.ndarray
    window_ids: np.ndarray
    subject_ids: np.ndarray
    label_names: list[str]

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def from_samples(cls, samples: list[PretextSample], label_names: list[str]) -> "PretextSet":
        return cls(
            values=np.stack([s.values for s in samples]).astype(np.float64),
            labels=np.array([s.transform_labels for s in samples], dtype=np.int64),
            window_ids=np.array([s.source_window_id for s in samples], dtype=np.int64),
            subject_ids=np.array([s.subject_id for s in samples], dtype=object),
            label_names=list(label_names),
        )

    def subset(self, index: np.ndarray) -> "PretextSet":
        return PretextSet(
            values=self.values[index],
            labels=self.labels[index],
            window_ids=self.window_ids[index],
            subject_ids=self.subject_ids[index],
            label_names=self.label_names,
        )


# ── Reports ────────────────────────────────────────────────────────────────

class FoldResult(BaseModel):
    subject_id: str
    accuracy: float
    f1: float
    n_test: int = 0
    flags: list[str] = Field(default_factory=list)


class MetricsReport(BaseModel):
    task_id: str = ""
    mode: str = ""
    dataset_id: str = ""
    folds: list[FoldResult] = Field(default_factory=list)
    mean_accuracy: float = 0.0
    mean_f1: float = 0.0
    std_accuracy: float = 0.0
    std_f1: float = 0.0
    config_hash: str = ""
    manifest_hash: str = ""
    seed: int = 0
    wall_time_s: float = 0.0

    @classmethod
    def from_folds(cls, folds: list[FoldResult], **provenance) -> "MetricsReport":
        acc = np.array([f.accuracy for f in folds], dtype=np.float64)
        f1 = np.array([f.f1 for f in folds], dtype=np.float64)
        return cls(
            folds=folds,
            mean_accuracy=float(acc.mean()) if len(acc) else 0.0,
            mean_f1=float(f1.mean()) if len(f1) else 0.0,
            std_accuracy=float(acc.std()) if len(acc) else 0.0,
            std_f1=float(f1.std()) if len(f1) else 0.0,
            **provenance,
        )


class LowDataRow(BaseModel):
    size: int | None            # None = full training fold
    mean_accuracy: float
    std_accuracy: float
    mean_f1: float
    std_f1: float
    repeats: int


class LowDataReport(BaseModel):
    rows: list[LowDataRow] = Field(default_factory=list)
    config_hash: str = ""
    seed: int = 0


class AblationRow(BaseModel):
    variant: str
    mean_accuracy: float
    std_accuracy: float
    mean_f1: float
    std_f1: float
    accuracy_drop: float | None = None
    f1_drop: float | None = None
    n_labels: int | None = None


class AblationReport(BaseModel):
    kind: str
    rows: list[AblationRow] = Field(default_factory=list)
    config_hash: str = ""
    seed: int = 0
