"""Configuration management — loads the run config from YAML + CLI overrides + env vars.

One flat key space (``RunConfig``). The per-stage configs used by the
library (``PreprocessConfig``, ``TransformConfig``, ``EncoderConfig``,
``TrainConfig``) are derived from it. Defaults equal the values stated in
the method description; ``config/default.yaml`` documents each one.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Literal

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.errors import ConfigError

log = logging.getLogger(__name__)

# Load .env from backend/ dir first, then fall back to project root
_backend_dir = Path(__file__).resolve().parent.parent
load_dotenv(_backend_dir / ".env")
load_dotenv(_backend_dir.parent / ".env")

SEED_ENV_VAR = "PHYSIOSSL_SEED"
CONFIG_VERSION = 1

MODALITY_NAMES = ("EDA", "BVP", "TEMP")
TRANSFORM_NAMES = ("noise", "magnitude_warp", "permutation", "time_warp", "crop")
TRANSFORM_LETTERS = {"N": "noise", "M": "magnitude_warp", "P": "permutation", "T": "time_warp", "C": "crop"}

# (lr, batch_size, epochs) per training protocol
PROTOCOL_PRESETS: dict[str, dict[str, float | int]] = {
    "pretext": {"lr": 5e-3, "batch_size": 32, "epochs": 20},
    "wesad": {"lr": 1e-4, "batch_size": 128, "epochs": 20},
    "case": {"lr": 1e-3, "batch_size": 64, "epochs": 64},
    "kemocon": {"lr": 1e-3, "batch_size": 64, "epochs": 64},
}

# Low-pass cutoffs (Hz) per dataset protocol
CUTOFF_PRESETS: dict[str, dict[str, float]] = {
    "presage": {"EDA": 0.5, "BVP": 2.0, "TEMP": 0.5},
    "wesad": {"EDA": 0.5, "BVP": 2.0, "TEMP": 0.5},
    "kemocon": {"EDA": 0.5, "BVP": 2.0, "TEMP": 0.5},
    "case": {"EDA": 2.0, "BVP": 2.0, "TEMP": 2.0},
}

OVERLAP_PRESETS: dict[str, float] = {"presage": 0.995, "wesad": 0.995, "case": 0.99, "kemocon": 0.95}


# ── Stage configs ─────────────────────────────────────────────────────────

class PreprocessConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    target_fs: float = 4.0
    window_s: float = 60.0
    overlap_frac: float = 0.995
    cutoffs: dict[str, float] = Field(default_factory=lambda: dict(CUTOFF_PRESETS["wesad"]))
    filter_order: int = 4
    segment_after_resample: bool = True

    @field_validator("overlap_frac")
    @classmethod
    def _overlap_range(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError(f"overlap_frac must lie in [0, 1), got {v}")
        return v

    @field_validator("target_fs", "window_s")
    @classmethod
    def _positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be > 0")
        return v

    @field_validator("filter_order")
    @classmethod
    def _order(cls, v: int) -> int:
        if v < 1:
            raise ValueError("filter_order must be >= 1")
        return v

    @property
    def window_len(self) -> int:
        return int(round(self.window_s * self.target_fs))


class TransformConfig(BaseModel):
    """Parameters of the five signal transformations."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    snr_db: float = 15.0
    mw_sigma: float = 0.1
    mw_knots: int = 4
    perm_segments: int = 9
    tw_segments: int = 4
    tw_stretch: float = 1.05
    crop_ratio: float = 0.2
    enabled: tuple[str, ...] = TRANSFORM_NAMES
    independent_per_modality: bool = False

    @model_validator(mode="after")
    def _check(self) -> "TransformConfig":
        if self.perm_segments < 1:
            raise ValueError("perm_segments must be >= 1")
        if self.tw_segments < 2:
            raise ValueError("tw_segments must be >= 2")
        if self.tw_stretch < 1.0:
            raise ValueError("tw_stretch must be >= 1 (1 is the identity setting)")
        if not 0.0 < self.crop_ratio <= 1.0:
            raise ValueError("crop_ratio must lie in (0, 1]")
        if self.mw_knots < 2:
            raise ValueError("mw_knots must be >= 2")
        if self.mw_sigma < 0:
            raise ValueError("mw_sigma must be >= 0")
        unknown = [t for t in self.enabled if t not in TRANSFORM_NAMES]
        if unknown:
            raise ValueError(f"unknown transforms: {unknown}")
        if len(set(self.enabled)) != len(self.enabled) or not self.enabled:
            raise ValueError("enabled transforms must be a non-empty list without duplicates")
        return self

    @property
    def label_names(self) -> list[str]:
        """Label space: index 0 is the untouched window, then enabled transforms in canonical order."""
        return ["original"] + [t for t in TRANSFORM_NAMES if t in self.enabled]

    @property
    def n_labels(self) -> int:
        return len(self.label_names)


class EncoderConfig(BaseModel):
    """Architecture of the modality encoders, shared transformer and heads."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    d_embed: int = 128
    tcn_filters: int = 16
    tcn_kernel: int = 6
    tcn_dilations: tuple[int, ...] = (1, 2)
    tcn_paddings: tuple[int, ...] | None = (5, 10)
    tcn_convs_per_block: int = 2
    tcn_dropout: float = 0.1
    n_heads: int = 4
    ff_dim: int = 128
    attn_dropout: float = 0.2
    positional_encoding: Literal["none", "fixed", "learnable"] = "none"
    n_modalities: int = 3
    window_len: int = 240
    pretext_hidden: int = 64
    pretext_dropout: float = 0.1
    emotion_hidden: int = 192
    emotion_dropout: float = 0.2
    bn_momentum: float = 0.1
    fusion: Literal["intermediate", "early", "late"] = "intermediate"
    pretext_head: Literal["per_modality", "overall"] = "per_modality"
    use_tcn: bool = True
    use_transformer: bool = True

    @model_validator(mode="after")
    def _check(self) -> "EncoderConfig":
        if self.d_embed % self.n_heads != 0:
            raise ValueError(f"d_embed={self.d_embed} is not divisible by n_heads={self.n_heads}")
        paddings = self.paddings
        if len(paddings) != len(self.tcn_dilations):
            raise ValueError("tcn_paddings and tcn_dilations must have equal length")
        for p, d in zip(paddings, self.tcn_dilations):
            if p != (self.tcn_kernel - 1) * d:
                raise ValueError(f"causal padding must be (kernel-1)*dilation = {(self.tcn_kernel - 1) * d}, got {p}")
        if self.n_modalities < 1 or self.window_len < 1:
            raise ValueError("n_modalities and window_len must be >= 1")
        if self.tcn_convs_per_block < 1:
            raise ValueError("tcn_convs_per_block must be >= 1")
        return self

    @property
    def paddings(self) -> tuple[int, ...]:
        if self.tcn_paddings is None:
            return tuple((self.tcn_kernel - 1) * d for d in self.tcn_dilations)
        return self.tcn_paddings

    @property
    def n_tokens(self) -> int:
        return self.n_modalities * self.window_len


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    stage: Literal["pretext", "downstream"] = "downstream"
    mode: Literal["frozen", "finetuned", "scratch"] = "finetuned"
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 64
    weight_decay: float = 5e-7
    momentum: float = 0.0
    seed: int = 0
    dataset_id: str = ""
    task_id: str = ""
    checkpoint_path: str | None = None
    f1_average: Literal["macro", "weighted"] = "macro"

    @model_validator(mode="after")
    def _check(self) -> "TrainConfig":
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("lr must be > 0, batch_size >= 1, epochs >= 0")
        return self

    def require_checkpoint(self, has_checkpoint: bool) -> None:
        """Frozen/fine-tuned runs need a checkpoint; training from scratch forbids one."""
        if self.stage != "downstream":
            return
        if self.mode in ("frozen", "finetuned") and not has_checkpoint:
            raise ConfigError(f"mode '{self.mode}' requires a pretrained checkpoint")
        if self.mode == "scratch" and has_checkpoint:
            raise ConfigError("mode 'scratch' must not be given a checkpoint")


# ── Run config (flat) ─────────────────────────────────────────────────────

class RunConfig(BaseModel):
    """Flat, versioned run configuration. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    config_version: int = CONFIG_VERSION
    seed: int = 0
    dataset_id: str = ""
    task_id: str = ""
    preset: Literal["wesad", "case", "kemocon"] | None = None
    jobs: int = 1

    # Preprocessing; None means "take it from the dataset manifest"
    target_fs: float | None = None
    window_s: float | None = None
    overlap_frac: float | None = None
    cutoff_eda: float | None = None
    cutoff_bvp: float | None = None
    cutoff_temp: float | None = None
    filter_order: int = 4
    segment_after_resample: bool = True

    # Transformations
    snr_db: float = 15.0
    mw_sigma: float = 0.1
    mw_knots: int = 4
    perm_segments: int = 9
    tw_segments: int = 4
    tw_stretch: float = 1.05
    crop_ratio: float = 0.2
    transforms: list[str] = Field(default_factory=lambda: list(TRANSFORM_NAMES))
    independent_per_modality: bool = False

    # Encoder and heads
    d_embed: int = 128
    tcn_filters: int = 16
    tcn_kernel: int = 6
    tcn_dilations: list[int] = Field(default_factory=lambda: [1, 2])
    tcn_convs_per_block: int = 2
    tcn_dropout: float = 0.1
    n_heads: int = 4
    ff_dim: int = 128
    attn_dropout: float = 0.2
    positional_encoding: Literal["none", "fixed", "learnable"] = "none"
    fusion: Literal["intermediate", "early", "late"] = "intermediate"
    pretext_head: Literal["per_modality", "overall"] = "per_modality"
    use_tcn: bool = True
    use_transformer: bool = True

    # Pretext training
    pretext_lr: float = 5e-3
    pretext_batch_size: int = 32
    pretext_epochs: int = 20
    pretext_holdout_frac: float = 0.0

    # Downstream training
    mode: Literal["frozen", "finetuned", "scratch"] = "finetuned"
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 64
    weight_decay: float = 5e-7
    momentum: float = 0.0
    f1_average: Literal["macro", "weighted"] = "macro"

    # Harness
    lowdata_sizes: list[int | None] = Field(default_factory=lambda: [1, 50, 100, 500, 1000])
    lowdata_repeats: int = 50
    missing_drop_prob: float = 0.5
    missing_repeats: int = 10

    def preprocess_config(self, defaults: PreprocessConfig | None = None) -> PreprocessConfig:
        """Merge run-config preprocessing keys over the manifest's values."""
        base = defaults or PreprocessConfig()
        cutoffs = dict(base.cutoffs)
        for name, value in (("EDA", self.cutoff_eda), ("BVP", self.cutoff_bvp), ("TEMP", self.cutoff_temp)):
            if value is not None:
                cutoffs[name] = value
        return _build(
            PreprocessConfig,
            target_fs=self.target_fs if self.target_fs is not None else base.target_fs,
            window_s=self.window_s if self.window_s is not None else base.window_s,
            overlap_frac=self.overlap_frac if self.overlap_frac is not None else base.overlap_frac,
            cutoffs=cutoffs,
            filter_order=self.filter_order,
            segment_after_resample=self.segment_after_resample,
        )

    def transform_config(self) -> TransformConfig:
        names = [TRANSFORM_LETTERS.get(t, t) for t in self.transforms]
        return _build(
            TransformConfig,
            snr_db=self.snr_db,
            mw_sigma=self.mw_sigma,
            mw_knots=self.mw_knots,
            perm_segments=self.perm_segments,
            tw_segments=self.tw_segments,
            tw_stretch=self.tw_stretch,
            crop_ratio=self.crop_ratio,
            enabled=tuple(names),
            independent_per_modality=self.independent_per_modality,
        )

    def encoder_config(self, window_len: int = 240, n_modalities: int = 3) -> EncoderConfig:
        return _build(
            EncoderConfig,
            d_embed=self.d_embed,
            tcn_filters=self.tcn_filters,
            tcn_kernel=self.tcn_kernel,
            tcn_dilations=tuple(self.tcn_dilations),
            tcn_paddings=None,
            tcn_convs_per_block=self.tcn_convs_per_block,
            tcn_dropout=self.tcn_dropout,
            n_heads=self.n_heads,
            ff_dim=self.ff_dim,
            attn_dropout=self.attn_dropout,
            positional_encoding=self.positional_encoding,
            n_modalities=n_modalities,
            window_len=window_len,
            fusion=self.fusion,
            pretext_head=self.pretext_head,
            use_tcn=self.use_tcn,
            use_transformer=self.use_transformer,
        )

    def pretext_train_config(self) -> TrainConfig:
        return _build(
            TrainConfig,
            stage="pretext",
            lr=self.pretext_lr,
            batch_size=self.pretext_batch_size,
            epochs=self.pretext_epochs,
            weight_decay=self.weight_decay,
            momentum=self.momentum,
            seed=self.seed,
            dataset_id=self.dataset_id,
        )

    def train_config(self, checkpoint_path: str | None = None) -> TrainConfig:
        cfg = _build(
            TrainConfig,
            stage="downstream",
            mode=self.mode,
            lr=self.lr,
            batch_size=self.batch_size,
            epochs=self.epochs,
            weight_decay=self.weight_decay,
            momentum=self.momentum,
            seed=self.seed,
            dataset_id=self.dataset_id,
            task_id=self.task_id,
            checkpoint_path=checkpoint_path,
            f1_average=self.f1_average,
        )
        cfg.require_checkpoint(checkpoint_path is not None)
        return cfg

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=True)


def _build(model_cls: type[BaseModel], **kwargs: Any) -> Any:
    try:
        return model_cls(**kwargs)
    except ValidationError as e:
        raise ConfigError(f"invalid {model_cls.__name__}: {e}") from e


def parse_overrides(pairs: list[str] | None) -> dict[str, Any]:
    """Turn ``["lr=0.01", "transforms=[N,P]"]`` into typed values via YAML scalars."""
    out: dict[str, Any] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"override must look like KEY=VALUE, got {pair!r}")
        key, raw = pair.split("=", 1)
        out[key.strip()] = yaml.safe_load(raw) if raw.strip() else None
    return out


def load_run_config(
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    seed: int | None = None,
) -> RunConfig:
    """Load the run config: YAML file, then overrides, then seed (flag > file > env > 0)."""
    data: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            loaded = yaml.safe_load(p.read_text(encoding="utf-8"))
        except yaml.YAMLError as e:
            raise ConfigError(f"config file {p} is not valid YAML: {e}") from e
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError(f"config file {p} must contain a mapping")
        data.update(loaded or {})
    data.update(overrides or {})

    version = data.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {version} (expected {CONFIG_VERSION})")

    if seed is not None:
        data["seed"] = seed
    elif "seed" not in data and os.getenv(SEED_ENV_VAR):
        try:
            data["seed"] = int(os.environ[SEED_ENV_VAR])
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from e

    preset = data.get("preset")
    if preset:
        if preset not in PROTOCOL_PRESETS or preset == "pretext":
            raise ConfigError(f"unknown preset {preset!r}")
        # null in the file counts as unset
        fill = dict(PROTOCOL_PRESETS[preset])
        cutoffs = CUTOFF_PRESETS[preset]
        fill.update(cutoff_eda=cutoffs["EDA"], cutoff_bvp=cutoffs["BVP"], cutoff_temp=cutoffs["TEMP"])
        fill["overlap_frac"] = OVERLAP_PRESETS[preset]
        for key, value in fill.items():
            if data.get(key) is None:
                data[key] = value
        log.info("Applied %s protocol preset", preset)

    cfg = _build(RunConfig, **data)
    # Validate derived configs eagerly so errors surface at load time
    cfg.transform_config()
    cfg.encoder_config()
    return cfg
