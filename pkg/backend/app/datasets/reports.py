"""Report writers — a CSV table plus a YAML summary carrying provenance."""

from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd
import yaml
from filelock import FileLock
from pydantic import BaseModel

from app.models import AblationReport, LowDataReport, MetricsReport

log = logging.getLogger(__name__)


def report_table(report: BaseModel) -> pd.DataFrame:
    if isinstance(report, MetricsReport):
        rows = [
            {
                "subject_id": f.subject_id,
                "accuracy": f.accuracy,
                "f1": f.f1,
                "n_test": f.n_test,
                "flags": ";".join(f.flags),
            }
            for f in report.folds
        ]
        return pd.DataFrame(rows, columns=["subject_id", "accuracy", "f1", "n_test", "flags"])
    if isinstance(report, (LowDataReport, AblationReport)):
        return pd.DataFrame([r.model_dump() for r in report.rows])
    raise TypeError(f"no table layout for {type(report).__name__}")


def summary_table(reports: list[MetricsReport]) -> pd.DataFrame:
    """Comparison-table layout: one row per (task, mode) with mean ± std accuracy and F1."""
    return pd.DataFrame([
        {
            "task": r.task_id,
            "mode": r.mode,
            "accuracy": r.mean_accuracy,
            "accuracy_std": r.std_accuracy,
            "f1": r.mean_f1,
            "f1_std": r.std_f1,
            "folds": len(r.folds),
        }
        for r in reports
    ])


def write_report(report: BaseModel, out_dir: str | Path, name: str, effective_config: dict | None = None) -> Path:
    """Write ``<name>.csv`` and ``<name>.yaml``; returns the YAML path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    yaml_path = out_dir / f"{name}.yaml"

    summary = report.model_dump(mode="json")
    if effective_config is not None:
        summary["effective_config"] = effective_config

    with FileLock(str(yaml_path) + ".lock"):
        report_table(report).to_csv(csv_path, index=False, lineterminator="\n", float_format="%.6f")
        yaml_path.write_text(yaml.safe_dump(summary, sort_keys=False), encoding="utf-8")
    log.info("Wrote report %s", yaml_path)
    return yaml_path
