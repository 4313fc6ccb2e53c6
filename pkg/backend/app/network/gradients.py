"""Gradient contract — named gradients for every parameter, plus a finite-difference check.

Usage:
    grads = compute_gradients(loss, model)
    apply_gradients(model, grads)
    optimizer.step()

    report = check_gradients(model.double(), lambda: loss_of(model), n_per_group=20)
    assert report.passed
"""

from __future__ import annotations

import logging
from collections.abc import Callable

import numpy as np
import torch
from pydantic import BaseModel, Field
from torch import nn

from app.errors import ConfigError, GradientError

log = logging.getLogger(__name__)


def compute_gradients(loss: torch.Tensor, model: nn.Module) -> dict[str, torch.Tensor]:
    """Gradient of ``loss`` for every named parameter of ``model``.

    Parameters off the active path, or with ``requires_grad=False``, get zeros.
    Raises GradientError on the first non-finite gradient.
    """
    named = list(model.named_parameters())
    trainable = [(n, p) for n, p in named if p.requires_grad]
    grads = torch.autograd.grad(loss, [p for _, p in trainable], allow_unused=True) if trainable else ()
    by_name = {n: g for (n, _), g in zip(trainable, grads)}

    out: dict[str, torch.Tensor] = {}
    for name, p in named:
        g = by_name.get(name)
        g = torch.zeros_like(p) if g is None else g.detach()
        if not torch.isfinite(g).all():
            raise GradientError(f"non-finite gradient for parameter '{name}'", parameter=name)
        out[name] = g
    return out


def apply_gradients(model: nn.Module, grads: dict[str, torch.Tensor]) -> None:
    for name, p in model.named_parameters():
        if p.requires_grad:
            p.grad = grads[name]


def disable_dropout(model: nn.Module) -> None:
    for m in model.modules():
        if isinstance(m, nn.Dropout):
            m.p = 0.0


class GradCheckEntry(BaseModel):
    parameter: str
    group: str
    index: int
    analytic: float
    numeric: float
    forward: float
    backward: float
    rel_error: float
    kink: bool = False


class GradCheckReport(BaseModel):
    """Sampled entries; kink entries (one-sided differences disagree) are kept but never judged."""

    entries: list[GradCheckEntry] = Field(default_factory=list)
    tolerance: float = 1e-3

    def judged(self) -> list[GradCheckEntry]:
        return [e for e in self.entries if not e.kink]

    @property
    def max_rel_error(self) -> float:
        return max((e.rel_error for e in self.judged()), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    @property
    def n_kinks(self) -> int:
        return sum(e.kink for e in self.entries)

    def worst(self) -> GradCheckEntry | None:
        return max(self.judged(), key=lambda e: e.rel_error, default=None)

    def group_counts(self) -> dict[str, int]:
        """Judged entries per parameter group."""
        counts: dict[str, int] = {}
        for e in self.judged():
            counts[e.group] = counts.get(e.group, 0) + 1
        return counts


def parameter_group(name: str) -> str:
    """Owning module of a parameter, cut at the first list index or after two levels.

    ``encoder.encoders.1.tcn.blocks.0.net.0.bias`` -> ``encoder.encoders.1``,
    ``encoder.transformer.attn.w_q.weight`` -> ``encoder.transformer``,
    ``heads.2.mlp.0.weight`` -> ``heads.2``.
    """
    parts = name.split(".")[:-1]
    group: list[str] = []
    for i, part in enumerate(parts):
        group.append(part)
        if part.isdigit():
            break
        if len(group) >= 2 and not (i + 1 < len(parts) and parts[i + 1].isdigit()):
            break
    return ".".join(group)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-5)


def check_gradients(
    model: nn.Module,
    loss_fn: Callable[[], torch.Tensor],
    n_per_group: int = 20,
    h: float = 1e-4,
    seed: int = 0,
    tolerance: float = 1e-3,
    kink_tolerance: float = 1e-3,
) -> GradCheckReport:
    """Compare autograd against central differences on sampled entries of every parameter group.

    Entries are drawn from each group until ``n_per_group`` of them are
    judged or the group runs out. An entry whose forward and backward
    differences disagree beyond ``kink_tolerance`` sits within ``h`` of a ReLU
    kink; it is recorded with ``kink=True`` and excluded from the verdict.

    The model must be float64; dropout is switched off in place. ``loss_fn``
    recomputes the loss from the model's current parameters.
    """
    params = [(n, p) for n, p in model.named_parameters() if p.requires_grad]
    bad = [n for n, p in params if p.dtype != torch.float64]
    if bad:
        raise ConfigError(f"gradient check needs float64 parameters, '{bad[0]}' is {dict(params)[bad[0]].dtype}")
    disable_dropout(model)

    analytic = compute_gradients(loss_fn(), model)
    with torch.no_grad():
        f0 = loss_fn().item()
    rng = np.random.default_rng(seed)
    report = GradCheckReport(tolerance=tolerance)

    groups: dict[str, list[tuple[str, int]]] = {}
    for name, p in params:
        groups.setdefault(parameter_group(name), []).extend((name, i) for i in range(p.numel()))
    by_name = dict(params)

    for group, candidates in groups.items():
        judged = 0
        for pick in rng.permutation(len(candidates)).tolist():
            if judged >= n_per_group:
                break
            name, i = candidates[pick]
            flat = by_name[name].data.view(-1)
            orig = flat[i].item()
            with torch.no_grad():
                flat[i] = orig + h
                f_plus = loss_fn().item()
                flat[i] = orig - h
                f_minus = loss_fn().item()
                flat[i] = orig
            fwd = (f_plus - f0) / h
            bwd = (f0 - f_minus) / h
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = analytic[name].reshape(-1)[i].item()
            kink = _rel(fwd, bwd) > kink_tolerance
            judged += not kink
            report.entries.append(GradCheckEntry(
                parameter=name, group=group, index=i, analytic=a, numeric=numeric,
                forward=fwd, backward=bwd, rel_error=_rel(a, numeric), kink=kink,
            ))

    worst = report.worst()
    log.info(
        "Gradient check: %d entries in %d groups, %d kinks skipped, max relative error %.2e%s",
        len(report.entries), len(groups), report.n_kinks, report.max_rel_error,
        f" ({worst.parameter}[{worst.index}])" if worst is not None else "",
    )
    return report
