"""Dataset manifests — YAML files naming subjects, signal files and tasks.

Paths inside a manifest are relative to the manifest's directory.

Example:
    format_version: 1
    dataset_id: wesad
    target_fs: 4
    window_s: 60
    overlap_frac: 0.995
    cutoffs: {EDA: 0.5, BVP: 2.0, TEMP: 0.5}
    preset: wesad
    subjects:
      - id: S2
        files: {EDA: S2/EDA.csv, BVP: S2/BVP.csv, TEMP: S2/TEMP.csv}
        labels: {class: S2/labels.csv}
    tasks:
      - id: stress2
        n_classes: 2
        track: class
        label_map: {1: 0, 3: 0, 2: 1}
        ignore: [0, 4, 5, 6, 7]
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, model_validator

from app.config import CUTOFF_PRESETS, PreprocessConfig
from app.errors import ConfigError

MANIFEST_VERSION = 1


class SubjectEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    files: dict[str, str]
    labels: dict[str, str] = Field(default_factory=dict)


class TaskDefinition(BaseModel):
    """Maps raw label values on one track to class ids 0..n_classes-1."""

    model_config = ConfigDict(extra="forbid")

    id: str
    n_classes: int
    track: str = "class"
    label_map: dict[int, int]
    ignore: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "TaskDefinition":
        if self.n_classes < 1:
            raise ValueError(f"task {self.id}: n_classes must be >= 1")
        targets = set(self.label_map.values())
        if not targets <= set(range(self.n_classes)):
            raise ValueError(f"task {self.id}: label_map targets {sorted(targets)} outside 0..{self.n_classes - 1}")
        overlap = set(self.ignore) & set(self.label_map)
        if overlap:
            raise ValueError(f"task {self.id}: labels {sorted(overlap)} are both mapped and ignored")
        return self

    def covers(self, raw_value: int) -> bool:
        return raw_value in self.label_map or raw_value in self.ignore


class DatasetManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = MANIFEST_VERSION
    dataset_id: str
    target_fs: float = 4.0
    window_s: float = 60.0
    overlap_frac: float = 0.995
    cutoffs: dict[str, float] = Field(default_factory=lambda: dict(CUTOFF_PRESETS["wesad"]))
    filter_order: int = 4
    native_fs: dict[str, float] | None = None
    preset: str | None = None
    subjects: list[SubjectEntry] = Field(default_factory=list)
    tasks: list[TaskDefinition] = Field(default_factory=list)

    _root: Path = PrivateAttr(default_factory=Path.cwd)

    @property
    def root(self) -> Path:
        return self._root

    def with_root(self, root: str | Path) -> "DatasetManifest":
        self._root = Path(root)
        return self

    def resolve(self, relative: str) -> Path:
        p = Path(relative)
        return p if p.is_absolute() else self._root / p

    def preprocess_config(self) -> PreprocessConfig:
        try:
            return PreprocessConfig(
                target_fs=self.target_fs,
                window_s=self.window_s,
                overlap_frac=self.overlap_frac,
                cutoffs=dict(self.cutoffs),
                filter_order=self.filter_order,
            )
        except ValidationError as e:
            raise ConfigError(f"manifest {self.dataset_id}: {e}") from e

    def task(self, task_id: str) -> TaskDefinition:
        for t in self.tasks:
            if t.id == task_id:
                return t
        known = ", ".join(t.id for t in self.tasks) or "none"
        raise ConfigError(f"dataset {self.dataset_id} has no task {task_id!r} (known: {known})")

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json", exclude_none=True), sort_keys=False)


def manifest_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"manifest not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"manifest {path} is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"manifest {path} must contain a mapping")
    version = data.get("format_version", MANIFEST_VERSION)
    if version != MANIFEST_VERSION:
        raise ConfigError(f"manifest {path}: unsupported format_version {version}")
    try:
        manifest = DatasetManifest(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid manifest {path}: {e}") from e
    return manifest.with_root(path.parent)
