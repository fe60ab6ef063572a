"""Random forest regression: bootstrap trees averaging, per-split feature
subsampling. Randomness is order-seeded: tree t draws from a stream keyed
on (rng_seed, t), so a fit is reproducible for a fixed seed and row order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import Dataset
from .tree import Tree, grow_variance_tree, presort

UNLIMITED_DEPTH = 10 ** 9


@dataclass
class ForestParams:
    B: int = 500
    d: int = 40
    v: float = 1.0
    m: int = 10
    s: float = 1.0
    rng_seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.B < 1 or self.d < 1 or self.m < 1:
            raise ValueError("B, d, and m must be >= 1")
        if not 0 < self.v <= 1 or not 0 < self.s <= 1:
            raise ValueError("v and s must lie in (0, 1]")


@dataclass
class ForestModel:
    trees: list
    params: ForestParams
    column_names: tuple[str, ...]

    method = "rf"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros(len(X))
        for t in self.trees:
            out += t.predict(X)
        return out / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "params": {"B": self.params.B, "d": self.params.d, "v": self.params.v,
                       "m": self.params.m, "s": self.params.s,
                       "rng_seed": self.params.rng_seed,
                       "bootstrap": self.params.bootstrap},
            "column_names": list(self.column_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls([Tree.from_dict(t) for t in d["trees"]],
                   ForestParams(**d["params"]), tuple(d["column_names"]))


def fit_rf(data: Dataset, params: ForestParams) -> ForestModel:
    X = np.ascontiguousarray(data.X, dtype=np.float64)
    y = data.y
    n = len(y)
    n_draw = max(1, math.ceil(params.s * n))
    order = presort(X)
    trees = []
    for t in range(params.B):
        rng = np.random.default_rng(np.random.SeedSequence([params.rng_seed, t]))
        if params.bootstrap:
            mult = np.bincount(rng.integers(0, n, size=n_draw), minlength=n)
        elif n_draw >= n:
            mult = np.ones(n, dtype=np.int64)
        else:
            mult = np.zeros(n, dtype=np.int64)
            mult[rng.permutation(n)[:n_draw]] = 1
        trees.append(grow_variance_tree(X, y, rng, params.d, params.m, params.v,
                                        mult=mult, order=order))
    return ForestModel(trees, params, data.column_names)
