"""Ablation harness — five studies, each a list of variants over one base run config.

Every variant reuses the base seed, so differences come from the varied
axis only. Variants that change the encoder or the pretext task pretrain
their own checkpoint first (unless the run trains from scratch).

  fusion            intermediate | early | late | intermediate_overall
  modality_subset   EDA | BVP | TEMP | EDA+BVP | ... (any '+'-joined subset)
  missing_modality  EDA | BVP | TEMP — zeroed in a random share of train and test windows
  components_pe     full | no_tcn | no_transformer | fixed_pe | learnable_pe
  transform_subset  N | M | P | T | C | N+M | ... (letters of the enabled transforms)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field

from app.config import MODALITY_NAMES, TRANSFORM_LETTERS, RunConfig
from app.errors import ConfigError
from app.models import AblationReport, AblationRow, MetricsReport, Window, WindowSet
from app.seeding import derive_rng
from app.training.loso import FoldTransform, evaluate_loso
from app.training.pretrain import pretrain
from app.training.workflow import build_pretext_set, encoder_for, select_window_columns

log = logging.getLogger(__name__)

AblationKind = Literal["fusion", "modality_subset", "missing_modality", "components_pe", "transform_subset"]

DEFAULT_VARIANTS: dict[str, list[str]] = {
    "fusion": ["intermediate", "early", "late", "intermediate_overall"],
    "modality_subset": ["EDA", "BVP", "TEMP", "EDA+BVP", "EDA+TEMP", "BVP+TEMP", "EDA+BVP+TEMP"],
    "missing_modality": ["EDA", "BVP", "TEMP"],
    "components_pe": ["full", "no_tcn", "no_transformer", "fixed_pe", "learnable_pe"],
    "transform_subset": ["N", "M", "P", "T", "C", "N+M+P+T+C"],
}

_FUSION: dict[str, dict[str, Any]] = {
    "intermediate": {},
    "early": {"fusion": "early"},
    "late": {"fusion": "late"},
    "intermediate_overall": {"pretext_head": "overall"},
}

_COMPONENTS: dict[str, dict[str, Any]] = {
    "full": {},
    "no_tcn": {"use_tcn": False},
    "no_transformer": {"use_transformer": False},
    "fixed_pe": {"positional_encoding": "fixed"},
    "learnable_pe": {"positional_encoding": "learnable"},
}


class AblationSpec(BaseModel):
    kind: AblationKind
    variants: list[str] | None = None
    drop_prob: float = Field(default=0.5, ge=0.0, le=1.0)
    repeats: int = Field(default=10, ge=1)

    def variant_list(self) -> list[str]:
        return list(self.variants) if self.variants else list(DEFAULT_VARIANTS[self.kind])


@dataclass
class AblationContext:
    run: RunConfig
    pretext_windows: list[Window]       # unlabelled source windows for pretraining
    labelled: WindowSet
    n_classes: int
    jobs: int = 1


def _modality_columns(variant: str) -> list[int]:
    names = variant.split("+")
    unknown = [n for n in names if n not in MODALITY_NAMES]
    if unknown or len(set(names)) != len(names):
        raise ConfigError(f"unknown modality subset {variant!r}")
    return sorted(MODALITY_NAMES.index(n) for n in names)


def _variant_setup(kind: str, variant: str) -> tuple[dict[str, Any], list[int] | None]:
    """RunConfig overrides and modality columns for one variant."""
    if kind == "fusion":
        if variant not in _FUSION:
            raise ConfigError(f"unknown fusion variant {variant!r}")
        return _FUSION[variant], None
    if kind == "components_pe":
        if variant not in _COMPONENTS:
            raise ConfigError(f"unknown component variant {variant!r}")
        return _COMPONENTS[variant], None
    if kind == "transform_subset":
        letters = variant.split("+")
        if any(letter not in TRANSFORM_LETTERS for letter in letters):
            raise ConfigError(f"unknown transform subset {variant!r}")
        return {"transforms": letters}, None
    if kind == "modality_subset":
        return {}, _modality_columns(variant)
    raise ConfigError(f"unknown ablation kind {kind!r}")


def _evaluate(
    ctx: AblationContext,
    run: RunConfig,
    variant: str,
    columns: list[int] | None = None,
    fold_transform: FoldTransform | None = None,
    checkpoint=None,
) -> tuple[MetricsReport, Any]:
    labelled = ctx.labelled if columns is None else ctx.labelled.select_columns(columns)
    enc_cfg = encoder_for(run, labelled.values.shape)
    ckpt_path = None
    if run.mode != "scratch":
        if checkpoint is None:
            pset = build_pretext_set(select_window_columns(ctx.pretext_windows, columns), run, jobs=ctx.jobs)
            checkpoint = pretrain(pset, enc_cfg, run.pretext_train_config()).checkpoint
        ckpt_path = f"memory:{variant}"
    cfg = run.train_config(checkpoint_path=ckpt_path)
    report = evaluate_loso(
        labelled, ctx.n_classes, cfg, enc_cfg, checkpoint if ckpt_path else None,
        jobs=ctx.jobs, fold_transform=fold_transform, task_id=run.task_id, mode=variant,
    )
    return report, checkpoint


def mask_modality(data: WindowSet, column: int, prob: float, rng: np.random.Generator) -> WindowSet:
    """Zero one modality column in a random ``prob`` share of windows."""
    chosen = rng.random(len(data)) < prob
    if not chosen.any():
        return data
    values = data.values.copy()
    values[chosen, :, column] = 0.0
    return data.with_values(values)


def _row(variant: str, reports: list[MetricsReport], **extra) -> AblationRow:
    acc = np.array([r.mean_accuracy for r in reports])
    f1 = np.array([r.mean_f1 for r in reports])
    if len(reports) == 1:
        std_acc, std_f1 = reports[0].std_accuracy, reports[0].std_f1
    else:
        std_acc, std_f1 = float(acc.std()), float(f1.std())
    return AblationRow(
        variant=variant,
        mean_accuracy=float(acc.mean()),
        std_accuracy=std_acc,
        mean_f1=float(f1.mean()),
        std_f1=std_f1,
        **extra,
    )


def _missing_modality(ctx: AblationContext, spec: AblationSpec) -> list[AblationRow]:
    run = ctx.run
    variants = spec.variant_list()
    columns = [_modality_columns(v) for v in variants]
    if any(len(c) != 1 for c in columns):
        raise ConfigError("missing_modality variants must each name one modality")

    baseline, ckpt = _evaluate(ctx, run, "all_present")
    rows = [_row("all_present", [baseline], accuracy_drop=0.0, f1_drop=0.0)]
    for variant, (col,) in zip(variants, columns):
        reports = []
        for r in range(spec.repeats):
            def fold_transform(train: WindowSet, test: WindowSet, fold_idx: int, _col=col, _r=r):
                rng = derive_rng(run.seed, 11, _col, _r, fold_idx)
                return mask_modality(train, _col, spec.drop_prob, rng), mask_modality(test, _col, spec.drop_prob, rng)

            report, _ = _evaluate(ctx, run, f"missing_{variant}", fold_transform=fold_transform, checkpoint=ckpt)
            reports.append(report)
        row = _row(f"missing_{variant}", reports)
        row.accuracy_drop = baseline.mean_accuracy - row.mean_accuracy
        row.f1_drop = baseline.mean_f1 - row.mean_f1
        log.info("Missing %s: accuracy drop %.4f, F1 drop %.4f", variant, row.accuracy_drop, row.f1_drop)
        rows.append(row)
    return rows


def run_ablation(kind: str, spec: AblationSpec, ctx: AblationContext) -> AblationReport:
    if kind != spec.kind:
        raise ConfigError(f"ablation kind {kind!r} does not match spec kind {spec.kind!r}")
    if kind == "missing_modality":
        rows = _missing_modality(ctx, spec)
    else:
        # validate every variant name before any training starts
        setups = {v: _variant_setup(kind, v) for v in spec.variant_list()}
        rows = []
        for variant, (overrides, columns) in setups.items():
            run_v = ctx.run.model_copy(update=overrides)
            log.info("Ablation %s: variant %s", kind, variant)
            report, _ = _evaluate(ctx, run_v, variant, columns=columns)
            n_labels = run_v.transform_config().n_labels if kind == "transform_subset" else None
            rows.append(_row(variant, [report], n_labels=n_labels))
    return AblationReport(kind=kind, rows=rows, config_hash=ctx.run.config_hash(), seed=ctx.run.seed)
