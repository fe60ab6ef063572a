"""Shared containers for the prediction methods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.groups = np.asarray(self.groups)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        n = self.X.shape[0]
        if len(self.y) != n or len(self.groups) != n:
            raise ValueError("row count mismatch between X, y, and groups")
        if len(self.column_names) != self.X.shape[1]:
            raise ValueError("column name count does not match X")

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.groups[idx], self.column_names)


def binary_column_mask(X: np.ndarray) -> np.ndarray:
    """True for columns whose values all lie in {0, 1}."""
    return np.array([np.all((col == 0.0) | (col == 1.0)) for col in X.T])


class ColumnStandardizer:
    """Zero-mean/unit-variance scaling of continuous (non-binary) columns,
    fit on training rows only."""

    def __init__(self, X: np.ndarray):
        self.continuous = ~binary_column_mask(X)
        self.mean = np.where(self.continuous, X.mean(axis=0), 0.0)
        sd = X.std(axis=0)
        self.sd = np.where(self.continuous & (sd > 0), sd, 1.0)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.sd

    def to_dict(self) -> dict:
        return {"continuous": self.continuous.tolist(),
                "mean": self.mean.tolist(), "sd": self.sd.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnStandardizer":
        obj = cls.__new__(cls)
        obj.continuous = np.array(data["continuous"], dtype=bool)
        obj.mean = np.array(data["mean"])
        obj.sd = np.array(data["sd"])
        return obj
