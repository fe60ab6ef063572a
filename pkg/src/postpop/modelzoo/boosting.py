"""Regularized gradient-boosted trees for squared error.

With loss l = (1/2)(y - yhat)^2 the per-point gradient is yhat - y and the
hessian is 1, so each round fits a regularized tree to the residuals:
leaf weight -G/(H + lambda), split gain gated by gamma_split. The fit
starts from the training mean and adds rho times each tree's output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import Dataset
from .tree import Tree, grow_xgb_tree, presort


@dataclass
class XgbParams:
    B: int = 2000
    d: int = 10
    v: float = 0.8
    m: int = 5
    s: float = 0.6
    rho: float = 0.01
    gamma_split: float = 0.005
    lam: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.B < 1 or self.d < 1 or self.m < 1:
            raise ValueError("B, d, and m must be >= 1")
        if not 0 < self.v <= 1 or not 0 < self.s <= 1:
            raise ValueError("v and s must lie in (0, 1]")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if self.gamma_split < 0 or self.lam < 0:
            raise ValueError("gamma_split and lam must be >= 0")


@dataclass
class XgbModel:
    trees: list
    base_score: float
    params: XgbParams
    column_names: tuple[str, ...]
    train_losses: list

    method = "xgb"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.full(len(X), self.base_score)
        for t in self.trees:
            out += self.params.rho * t.predict(X)
        return out

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "base_score": self.base_score,
            "params": {"B": self.params.B, "d": self.params.d, "v": self.params.v,
                       "m": self.params.m, "s": self.params.s, "rho": self.params.rho,
                       "gamma_split": self.params.gamma_split, "lam": self.params.lam,
                       "rng_seed": self.params.rng_seed},
            "column_names": list(self.column_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "XgbModel":
        return cls([Tree.from_dict(t) for t in d["trees"]], d["base_score"],
                   XgbParams(**d["params"]), tuple(d["column_names"]), [])


def fit_xgb(data: Dataset, params: XgbParams) -> XgbModel:
    X = np.ascontiguousarray(data.X, dtype=np.float64)
    y = data.y
    n = len(y)
    n_draw = max(1, math.ceil(params.s * n))
    order = presort(X)
    hess = np.ones(n)
    base = float(y.mean())
    pred = np.full(n, base)
    trees, losses = [], []
    for t in range(params.B):
        rng = np.random.default_rng(np.random.SeedSequence([params.rng_seed, t]))
        if n_draw >= n:
            mult = np.ones(n, dtype=np.int64)
        else:
            mult = np.zeros(n, dtype=np.int64)
            mult[rng.permutation(n)[:n_draw]] = 1
        grad = pred - y
        tree = grow_xgb_tree(X, grad, hess, rng, params.d, params.m, params.v,
                             params.lam, params.gamma_split,
                             mult=mult, order=order)
        pred += params.rho * tree.predict(X)
        trees.append(tree)
        losses.append(float(np.mean((y - pred) ** 2)) / 2.0)
    return XgbModel(trees, base, params, data.column_names, losses)
