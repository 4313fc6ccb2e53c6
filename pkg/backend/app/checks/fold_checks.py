"""Fold Validator — data conditions that degrade a run without invalidating it.

Checks that run inside segmentation and evaluation. None of them block;
each warning's check_name becomes a flag on the affected report row.

Four checks:
  1. Short recording — fewer samples than one window (no windows produced).
  2. Single-class test subject — accuracy/F1 on that fold are degenerate.
  3. Class absent from a training fold — macro-F1 scores it as 0.
  4. Low-data clipping — fewer windows of a class than the requested size.
"""

from __future__ import annotations

import numpy as np

from app.checks.base import BaseCheck, CheckResult, CheckSeverity


class FoldValidator(BaseCheck):

    def check(self, *, kind: str, **kwargs) -> CheckResult:
        handler = {
            "segmentation": self._check_segmentation,
            "test_fold": self._check_test_fold,
            "train_classes": self._check_train_classes,
            "lowdata_size": self._check_lowdata_size,
        }.get(kind)
        if handler is None:
            raise ValueError(f"unknown fold check {kind!r}")
        return handler(**kwargs)

    def _check_segmentation(self, *, length: int, window_len: int, subject_id: str = "") -> CheckResult:
        if length < window_len:
            return CheckResult(
                check_name="short_recording",
                severity=CheckSeverity.WARNING,
                message=f"subject {subject_id}: {length} samples is shorter than one window ({window_len}); no windows produced",
                context={"subject_id": subject_id, "length": length, "window_len": window_len},
            )
        return CheckResult(check_name="short_recording", severity=CheckSeverity.PASS)

    def _check_test_fold(self, *, labels: np.ndarray, subject_id: str = "") -> CheckResult:
        classes = np.unique(labels)
        if classes.size <= 1:
            return CheckResult(
                check_name="single_class_fold",
                severity=CheckSeverity.WARNING,
                message=f"held-out subject {subject_id} has a single class {classes.tolist()}",
                context={"subject_id": subject_id, "classes": classes.tolist()},
            )
        return CheckResult(check_name="single_class_fold", severity=CheckSeverity.PASS)

    def _check_train_classes(self, *, labels: np.ndarray, n_classes: int, subject_id: str = "") -> CheckResult:
        absent = sorted(set(range(n_classes)) - set(np.unique(labels).tolist()))
        if absent:
            return CheckResult(
                check_name="class_absent_in_training",
                severity=CheckSeverity.WARNING,
                message=f"fold {subject_id}: classes {absent} absent from training data",
                context={"subject_id": subject_id, "absent": absent},
            )
        return CheckResult(check_name="class_absent_in_training", severity=CheckSeverity.PASS)

    def _check_lowdata_size(self, *, available: int, requested: int, class_id: int) -> CheckResult:
        if available < requested:
            return CheckResult(
                check_name="lowdata_clipped",
                severity=CheckSeverity.WARNING,
                message=f"class {class_id}: requested {requested} windows, only {available} available",
                context={"class_id": class_id, "available": available, "requested": requested},
            )
        return CheckResult(check_name="lowdata_clipped", severity=CheckSeverity.PASS)
