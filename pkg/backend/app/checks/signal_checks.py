"""Signal Validator — checks streams before they enter the pipeline.

Three checks:
  1. Non-empty stream with a positive sampling rate.
  2. Finite values — NaN/Inf is rejected with the file and line it came from.
  3. Modality coverage — a recording must carry EDA, BVP and TEMP.

Usage in a loader:
    result = SignalValidator().check(samples=values, fs=4.0, source="S01/EDA.csv")
    raise_if_blocked(result)
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from app.checks.base import BaseCheck, CheckResult, CheckSeverity, most_severe

# CSV files carry one header row; data row i sits on line i + 2
_HEADER_LINES = 1


class SignalValidator(BaseCheck):
    """Validates one stream (or label column)."""

    def check(self, *, samples: np.ndarray, fs: float | None = None, source: str = "", **kwargs) -> CheckResult:
        results = [self._check_non_empty(samples, source)]
        if fs is not None:
            results.append(self._check_rate(fs, source))
        if len(samples):
            results.append(self._check_finite(samples, source))
        return most_severe(results, "signal_validation")

    def _check_non_empty(self, samples: np.ndarray, source: str) -> CheckResult:
        if len(samples) == 0:
            return CheckResult(
                check_name="empty_stream",
                severity=CheckSeverity.BLOCKED,
                message=f"{source}: stream has no samples",
                context={"source": source},
            )
        return CheckResult(check_name="empty_stream", severity=CheckSeverity.PASS)

    def _check_rate(self, fs: float, source: str) -> CheckResult:
        if not np.isfinite(fs) or fs <= 0:
            return CheckResult(
                check_name="sampling_rate",
                severity=CheckSeverity.BLOCKED,
                message=f"{source}: sampling rate must be > 0, got {fs}",
                context={"source": source, "fs": fs},
            )
        return CheckResult(check_name="sampling_rate", severity=CheckSeverity.PASS)

    def _check_finite(self, samples: np.ndarray, source: str) -> CheckResult:
        bad = np.flatnonzero(~np.isfinite(np.asarray(samples, dtype=np.float64)))
        if bad.size:
            line = int(bad[0]) + 1 + _HEADER_LINES
            return CheckResult(
                check_name="non_finite",
                severity=CheckSeverity.BLOCKED,
                message=f"{source}:{line}: non-numeric or non-finite value ({bad.size} in total)",
                context={"source": source, "line": line, "count": int(bad.size)},
            )
        return CheckResult(check_name="non_finite", severity=CheckSeverity.PASS)


class ModalityCoverageCheck(BaseCheck):
    """Blocks recordings that miss one of the required modalities."""

    def check(self, *, present: Iterable[str], required: Iterable[str], subject_id: str = "", **kwargs) -> CheckResult:
        missing = sorted(set(required) - set(present))
        if missing:
            return CheckResult(
                check_name="missing_modality",
                severity=CheckSeverity.BLOCKED,
                message=f"subject {subject_id}: missing modalities {', '.join(missing)}",
                context={"subject_id": subject_id, "missing": missing},
            )
        return CheckResult(check_name="missing_modality", severity=CheckSeverity.PASS)
