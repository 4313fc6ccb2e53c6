"""Checks — validation layer between raw data and the pipeline.

Two categories of checks:
  - Signal: ingestion-time checks on streams and label tracks (blocking)
  - Fold:   data conditions inside segmentation and evaluation folds (warning)

All checks return a CheckResult; the caller decides whether to proceed,
warn, or raise based on severity.
"""

from app.checks.base import CheckResult, CheckSeverity, log_check_result, raise_if_blocked

__all__ = ["CheckResult", "CheckSeverity", "log_check_result", "raise_if_blocked"]
