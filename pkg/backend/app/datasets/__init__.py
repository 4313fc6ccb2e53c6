"""Dataset manifests, loaders, the synthetic corpus and on-disk stores."""

from app.datasets.checkpoint import Checkpoint, load_checkpoint, restore_into, save_checkpoint
from app.datasets.loader import load_dataset
from app.datasets.manifest import DatasetManifest, SubjectEntry, TaskDefinition, load_manifest, manifest_hash
from app.datasets.pretext_store import load_pretext_dataset, save_pretext_dataset
from app.datasets.reports import write_report
from app.datasets.stores import load_windows, save_windows
from app.datasets.synthetic import frequency_threshold_predict, generate_synthetic_corpus, write_corpus

__all__ = [
    "Checkpoint",
    "DatasetManifest",
    "SubjectEntry",
    "TaskDefinition",
    "frequency_threshold_predict",
    "generate_synthetic_corpus",
    "load_checkpoint",
    "load_dataset",
    "load_manifest",
    "load_pretext_dataset",
    "load_windows",
    "manifest_hash",
    "restore_into",
    "save_checkpoint",
    "save_pretext_dataset",
    "save_windows",
    "write_corpus",
    "write_report",
]
