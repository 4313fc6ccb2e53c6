"""CLI entry point — every pipeline stage as a subcommand.

Usage:
    physiossl synth --subjects 4 --seed 7 --out runs/corpus
    physiossl preprocess --manifest runs/corpus/manifest.yaml --out runs/windows
    physiossl build-pretext --manifest runs/corpus/manifest.yaml --out runs/pretext
    physiossl pretrain --pretext runs/pretext --out runs/ssl
    physiossl train --manifest runs/corpus/manifest.yaml --mode finetuned --checkpoint runs/ssl/pretrained.ckpt
    physiossl evaluate --protocol loso --manifest runs/corpus/manifest.yaml --mode scratch
    physiossl ablate --kind fusion --manifest runs/corpus/manifest.yaml
    physiossl lowdata --manifest runs/corpus/manifest.yaml --sizes 1,50 --repeats 10

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
Logs go to stderr; every run writes ``effective_config.yaml`` into ``--out``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

import pandas as pd

from app.config import RunConfig, load_run_config, parse_overrides
from app.datasets.adapters import convert_wesad
from app.datasets.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from app.datasets.manifest import DatasetManifest, load_manifest, manifest_hash
from app.datasets.pretext_store import load_pretext_dataset, save_pretext_dataset
from app.datasets.reports import summary_table, write_report
from app.datasets.stores import load_windows, save_windows
from app.datasets.synthetic import generate_synthetic_corpus, write_corpus
from app.errors import ConfigError, PhysioSSLError
from app.models import TrainingStage, Window, WindowSet
from app.training.ablation import DEFAULT_VARIANTS, AblationContext, AblationSpec, run_ablation
from app.training.downstream import train_downstream
from app.training.loso import evaluate_loso
from app.training.lowdata import run_low_data_study
from app.training.workflow import build_pretext_set, encoder_for, labelled_set, prepare_windows, pretrain_run

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Usage errors become ConfigError (exit 1) instead of SystemExit(2)."""

    def error(self, message: str):
        raise ConfigError(f"{self.format_usage().rstrip()}\n{self.prog}: error: {message}")


# ── Shared helpers ─────────────────────────────────────────────────────────

def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_config(args: argparse.Namespace, manifest: DatasetManifest | None = None, **extra: Any) -> RunConfig:
    overrides = parse_overrides(args.set)
    if args.preset:
        overrides["preset"] = args.preset
    elif manifest is not None and manifest.preset and "preset" not in overrides:
        overrides["preset"] = manifest.preset
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if manifest is not None:
        overrides.setdefault("dataset_id", manifest.dataset_id)
    for key, value in extra.items():
        if value is not None:
            overrides[key] = value
    run = load_run_config(args.config, overrides=overrides, seed=args.seed)
    (_out_dir(args) / "effective_config.yaml").write_text(run.to_yaml(), encoding="utf-8")
    return run


def _manifest(args: argparse.Namespace) -> DatasetManifest | None:
    return load_manifest(args.manifest) if getattr(args, "manifest", None) else None


def _windows(args: argparse.Namespace, manifest: DatasetManifest | None, run: RunConfig) -> list[Window]:
    if getattr(args, "windows", None):
        return load_windows(args.windows)
    if manifest is None:
        raise ConfigError("either --manifest or --windows is required")
    return prepare_windows(manifest, run, jobs=run.jobs)


def _task(manifest: DatasetManifest, task_id: str | None):
    if task_id:
        return manifest.task(task_id)
    if not manifest.tasks:
        raise ConfigError(f"dataset {manifest.dataset_id} defines no tasks")
    return manifest.tasks[0]


def _checkpoint(args: argparse.Namespace) -> Checkpoint | None:
    return load_checkpoint(args.checkpoint) if getattr(args, "checkpoint", None) else None


def _labelled(args: argparse.Namespace, manifest: DatasetManifest, run: RunConfig):
    task = _task(manifest, args.task)
    data = labelled_set(_windows(args, manifest, run), task)
    return task, data


# ── Commands ───────────────────────────────────────────────────────────────

def cmd_synth(args: argparse.Namespace) -> int:
    run = _run_config(args)
    out = _out_dir(args)
    recordings, manifest = generate_synthetic_corpus(
        n_subjects=args.subjects,
        seconds_per_subject=args.seconds,
        n_classes=args.classes,
        seed=run.seed,
    )
    path = write_corpus(recordings, manifest, out)
    print(path)
    return 0


def cmd_convert_wesad(args: argparse.Namespace) -> int:
    _run_config(args)
    path = convert_wesad(args.src, _out_dir(args), subjects=args.subjects or None)
    print(path)
    return 0


def cmd_preprocess(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    run = _run_config(args, manifest)
    windows = prepare_windows(manifest, run, jobs=run.jobs)
    save_windows(windows, _out_dir(args) / "windows.npz")
    return 0


def cmd_build_pretext(args: argparse.Namespace) -> int:
    manifest = _manifest(args)
    run = _run_config(args, manifest)
    pset = build_pretext_set(_windows(args, manifest, run), run, jobs=run.jobs)
    save_pretext_dataset(pset, _out_dir(args) / "pretext", seed=run.seed)
    return 0


def cmd_pretrain(args: argparse.Namespace) -> int:
    manifest = _manifest(args)
    run = _run_config(args, manifest)
    if args.pretext:
        pset = load_pretext_dataset(args.pretext)
    else:
        pset = build_pretext_set(_windows(args, manifest, run), run, jobs=run.jobs)
    result = pretrain_run(pset, run)
    out = _out_dir(args)
    save_checkpoint(result.checkpoint, out / "pretrained.ckpt")
    pd.DataFrame([
        {
            "epoch": s.epoch,
            "loss": s.loss,
            **{f"loss_{i}": v for i, v in enumerate(s.component_losses)},
            **{f"acc_{i}": v for i, v in enumerate(s.accuracy)},
            **{f"holdout_acc_{i}": v for i, v in enumerate(s.holdout_accuracy or [])},
        }
        for s in result.history
    ]).to_csv(out / "pretrain_history.csv", index=False, lineterminator="\n")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    run = _run_config(args, manifest, mode=args.mode, task_id=args.task)
    task, data = _labelled(args, manifest, run)
    ckpt = _checkpoint(args)
    cfg = run.train_config(checkpoint_path=args.checkpoint)
    result = train_downstream(ckpt, data, task.n_classes, cfg, encoder_for(run, data.values.shape))
    out = _out_dir(args)
    enc_cfg = result.model.cfg
    save_checkpoint(
        Checkpoint.from_model(result.model, enc_cfg, task.n_classes, run.seed, TrainingStage.FINETUNED),
        out / "model.ckpt",
    )
    pd.DataFrame({"epoch": range(1, len(result.history) + 1), "loss": result.history}).to_csv(
        out / "train_history.csv", index=False, lineterminator="\n"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    run = _run_config(args, manifest, mode=args.mode, task_id=args.task)
    task, data = _labelled(args, manifest, run)
    cfg = run.train_config(checkpoint_path=args.checkpoint)
    report = evaluate_loso(
        data, task.n_classes, cfg, encoder_for(run, data.values.shape), _checkpoint(args),
        jobs=run.jobs,
        task_id=task.id,
        config_hash=run.config_hash(),
        manifest_hash=manifest_hash(args.manifest),
    )
    out = _out_dir(args)
    write_report(report, out, "metrics", effective_config=run.model_dump(mode="json"))
    summary_table([report]).to_csv(out / "summary.csv", index=False, lineterminator="\n", float_format="%.6f")
    return 0


def cmd_lowdata(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    run = _run_config(args, manifest, mode=args.mode, task_id=args.task)
    task, data = _labelled(args, manifest, run)
    cfg = run.train_config(checkpoint_path=args.checkpoint)
    sizes = _parse_sizes(args.sizes) if args.sizes else run.lowdata_sizes
    report = run_low_data_study(
        data, task.n_classes, cfg, encoder_for(run, data.values.shape), _checkpoint(args),
        sizes=sizes,
        repeats=args.repeats or run.lowdata_repeats,
        jobs=run.jobs,
        config_hash=run.config_hash(),
    )
    write_report(report, _out_dir(args), "lowdata", effective_config=run.model_dump(mode="json"))
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    run = _run_config(args, manifest, mode=args.mode, task_id=args.task)
    task = _task(manifest, args.task)
    windows = _windows(args, manifest, run)
    spec = AblationSpec(
        kind=args.kind,
        variants=args.variants.split(",") if args.variants else None,
        drop_prob=run.missing_drop_prob,
        repeats=run.missing_repeats,
    )
    ctx = AblationContext(
        run=run,
        pretext_windows=windows,
        labelled=labelled_set(windows, task),
        n_classes=task.n_classes,
        jobs=run.jobs,
    )
    report = run_ablation(args.kind, spec, ctx)
    write_report(report, _out_dir(args), f"ablation_{args.kind}", effective_config=run.model_dump(mode="json"))
    return 0


def _parse_sizes(raw: str) -> list[int | None]:
    sizes: list[int | None] = []
    for token in raw.split(","):
        token = token.strip().lower()
        if token in ("full", "all"):
            sizes.append(None)
        elif token.isdigit() and int(token) > 0:
            sizes.append(int(token))
        else:
            raise ConfigError(f"invalid low-data size {token!r}")
    return sizes


# ── Parser ─────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (falls back to PHYSIOSSL_SEED, then 0)")
    common.add_argument("--config", default=None, help="run config YAML")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--jobs", type=int, default=None, help="parallel workers (never changes results)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--preset", choices=["wesad", "case", "kemocon"], default=None)
    common.add_argument("--verbose", action="store_true")

    parser = _Parser(prog="physiossl", description="Self-supervised multimodal physiological signal pipeline")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    p.add_argument("--subjects", type=int, default=4)
    p.add_argument("--seconds", type=float, default=900.0)
    p.add_argument("--classes", type=int, default=2)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert-wesad", parents=[common], help="convert WESAD pickles to a manifest")
    p.add_argument("--src", required=True)
    p.add_argument("--subjects", nargs="*", default=None)
    p.set_defaults(func=cmd_convert_wesad)

    p = sub.add_parser("preprocess", parents=[common], help="filter, normalise, resample and segment")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("build-pretext", parents=[common], help="materialise the pretext dataset")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest")
    src.add_argument("--windows")
    p.set_defaults(func=cmd_build_pretext)

    p = sub.add_parser("pretrain", parents=[common], help="self-supervised pretraining")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest")
    src.add_argument("--windows")
    src.add_argument("--pretext")
    p.set_defaults(func=cmd_pretrain)

    def labelled_command(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--manifest", required=True)
        p.add_argument("--windows", default=None, help="preprocessed windows (skips preprocessing)")
        p.add_argument("--task", default=None, help="task id (default: first task in the manifest)")
        p.add_argument("--mode", choices=["frozen", "finetuned", "scratch"], default=None)
        p.add_argument("--checkpoint", default=None)
        p.set_defaults(func=func)
        return p

    labelled_command("train", cmd_train, "train the emotion classifier on all labelled windows")
    p = labelled_command("evaluate", cmd_evaluate, "leave-one-subject-out evaluation")
    p.add_argument("--protocol", choices=["loso"], default="loso")
    p = labelled_command("lowdata", cmd_lowdata, "low-data study")
    p.add_argument("--sizes", default=None, help="comma-separated windows per class, 'full' for all")
    p.add_argument("--repeats", type=int, default=None)
    p = labelled_command("ablate", cmd_ablate, "ablation studies")
    p.add_argument("--kind", required=True, choices=sorted(DEFAULT_VARIANTS))
    p.add_argument("--variants", default=None, help="comma-separated variant names")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        print(e, file=sys.stderr)
        return 1
    except SystemExit as e:                                 # --help
        return int(e.code or 0)

    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except ConfigError as e:
        log.error("Configuration error: %s", e)
        return 1
    except PhysioSSLError as e:
        log.error("%s: %s", type(e).__name__, e)
        return 2
    except Exception:
        log.exception("Unexpected error")
        return 2


if __name__ == "__main__":
    sys.exit(main())
