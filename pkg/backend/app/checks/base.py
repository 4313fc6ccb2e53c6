"""Base classes for the checks system.

Every check returns a CheckResult. Pipeline stages inspect the result's
severity to decide how to proceed:
  - PASS:    No issues — continue normally.
  - WARNING: Recoverable data condition — continue, log it, and record the
             check name as a flag on the affected report row.
  - BLOCKED: Hard violation — raise the matching pipeline error.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from app.errors import InputError, PhysioSSLError

log = logging.getLogger(__name__)


class CheckSeverity(str, Enum):
    """Outcome severity of a check."""
    PASS = "pass"
    WARNING = "warning"
    BLOCKED = "blocked"


@dataclass
class CheckResult:
    """Result of a single check."""

    check_name: str                         # e.g. "non_finite", "single_class_fold"
    severity: CheckSeverity
    message: str = ""
    context: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.severity == CheckSeverity.PASS

    @property
    def blocked(self) -> bool:
        return self.severity == CheckSeverity.BLOCKED


class BaseCheck(ABC):
    """Abstract base class for all checks."""

    @abstractmethod
    def check(self, **kwargs: Any) -> CheckResult:
        ...


def most_severe(results: list[CheckResult], check_name: str) -> CheckResult:
    """Return the first BLOCKED result, else the first WARNING, else a PASS."""
    for severity in (CheckSeverity.BLOCKED, CheckSeverity.WARNING):
        for r in results:
            if r.severity == severity:
                return r
    return CheckResult(check_name=check_name, severity=CheckSeverity.PASS)


def log_check_result(result: CheckResult, logger: logging.Logger | None = None) -> None:
    """Log warnings and blocks; passes are not logged."""
    if result.passed:
        return
    target = logger or log
    level = logging.ERROR if result.blocked else logging.WARNING
    target.log(level, "[%s] %s", result.check_name, result.message)


def raise_if_blocked(result: CheckResult, error_cls: type[PhysioSSLError] = InputError) -> None:
    if result.blocked:
        raise error_cls(result.message)
