from __future__ import annotations

import numpy as np
from sklearn.metrics import accuracy_score, f1_score

from app.errors import InputError


def compute_metrics(
    predictions: np.ndarray | list[int],
    labels: np.ndarray | list[int],
    average: str = "macro",
) -> tuple[float, float]:
    """(accuracy, F1). F1 averages over the classes present in labels or predictions."""
    y_pred = np.asarray(predictions, dtype=np.int64)
    y_true = np.asarray(labels, dtype=np.int64)
    if y_true.size == 0:
        raise InputError("compute_metrics needs at least one prediction")
    if y_true.shape != y_pred.shape:
        raise InputError(f"predictions {y_pred.shape} and labels {y_true.shape} differ in length")
    accuracy = float(accuracy_score(y_true, y_pred))
    f1 = float(f1_score(y_true, y_pred, average=average, zero_division=0))
    return accuracy, f1
