"""Error metrics used across the evaluation grid."""

from __future__ import annotations

import numpy as np


def _check(pred, actual):
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {actual.shape}")
    if pred.size == 0:
        raise ValueError("empty inputs")
    return pred, actual


def rmse(pred, actual) -> float:
    pred, actual = _check(pred, actual)
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def mae(pred, actual) -> float:
    pred, actual = _check(pred, actual)
    return float(np.mean(np.abs(pred - actual)))


def r_squared(pred, actual) -> float:
    pred, actual = _check(pred, actual)
    ss_res = float(np.sum((actual - pred) ** 2))
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
