"""Pretraining, downstream training, LOSO evaluation and the experiment harnesses."""

from app.training.ablation import AblationContext, AblationSpec, run_ablation
from app.training.downstream import DownstreamResult, predict, train_downstream
from app.training.loso import evaluate_loso, loso_splits
from app.training.lowdata import run_low_data_study, sample_per_class
from app.training.metrics import compute_metrics
from app.training.pretrain import PretrainResult, evaluate_pretext, pretrain, split_by_subject

__all__ = [
    "AblationContext",
    "AblationSpec",
    "DownstreamResult",
    "PretrainResult",
    "compute_metrics",
    "evaluate_loso",
    "evaluate_pretext",
    "loso_splits",
    "predict",
    "pretrain",
    "run_ablation",
    "run_low_data_study",
    "sample_per_class",
    "split_by_subject",
    "train_downstream",
]
