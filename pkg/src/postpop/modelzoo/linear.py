"""Ordinary least squares baseline with rank repair."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .base import Dataset

log = logging.getLogger(__name__)

RANK_TOL = 1e-9


class RankDeficientError(ValueError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__("design matrix rank-deficient after repair; "
                         f"dependent columns: {self.columns}")


@dataclass
class OlsModel:
    intercept: float
    coef: np.ndarray            # over kept columns
    kept_columns: tuple[int, ...]
    column_names: tuple[str, ...]
    r_squared: float
    adj_r_squared: float

    method = "lm"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self.intercept + X[:, self.kept_columns] @ self.coef

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "coef": self.coef.tolist(),
            "kept_columns": list(self.kept_columns),
            "column_names": list(self.column_names),
            "r_squared": self.r_squared,
            "adj_r_squared": self.adj_r_squared,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OlsModel":
        return cls(d["intercept"], np.array(d["coef"]), tuple(d["kept_columns"]),
                   tuple(d["column_names"]), d["r_squared"], d["adj_r_squared"])


def repair_rank(X: np.ndarray, column_names) -> list[int]:
    """Indices of columns kept after dropping constants and exact duplicates."""
    kept: list[int] = []
    seen: dict[bytes, int] = {}
    for j in range(X.shape[1]):
        col = X[:, j]
        if np.all(col == col[0]):
            log.warning("dropping constant column %s", column_names[j])
            continue
        key = col.tobytes()
        if key in seen:
            log.warning("dropping duplicate column %s (same as %s)",
                        column_names[j], column_names[seen[key]])
            continue
        seen[key] = j
        kept.append(j)
    return kept


def fit_ols(data: Dataset) -> OlsModel:
    """Least squares via SVD-backed lstsq, with an explicit intercept.

    Constant and exactly-duplicate columns are dropped up front with a
    warning; any remaining rank deficiency raises RankDeficientError naming
    the dependent columns (found by pivoted elimination).
    """
    kept = repair_rank(data.X, data.column_names)
    Xk = data.X[:, kept]
    design = np.column_stack([np.ones(len(data.y)), Xk])
    rank = np.linalg.matrix_rank(design, tol=RANK_TOL * max(design.shape))
    if rank < design.shape[1]:
        raise RankDeficientError(_dependent_columns(design, [("intercept", -1)] +
                                                    [(data.column_names[j], j) for j in kept]))
    beta, _, _, _ = np.linalg.lstsq(design, data.y, rcond=None)
    pred = design @ beta
    resid = data.y - pred
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((data.y - data.y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    n, p = design.shape
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p) if n > p else float("nan")
    return OlsModel(float(beta[0]), beta[1:], tuple(kept),
                    data.column_names, r2, adj)


def _dependent_columns(design: np.ndarray, names) -> list[str]:
    # QR with column pivoting via greedy Gram-Schmidt: columns whose
    # residual norm collapses are linearly dependent on earlier ones
    dependent = []
    basis: list[np.ndarray] = []
    for (name, _), col in zip(names, design.T):
        v = col.astype(np.float64).copy()
        for b in basis:
            v -= (b @ col) * b
        norm = np.linalg.norm(v)
        if norm < RANK_TOL * max(1.0, np.linalg.norm(col)):
            dependent.append(name)
        else:
            basis.append(v / norm)
    return dependent
