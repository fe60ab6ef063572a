"""Flat-array regression trees shared by the forest and boosting methods.

Split candidates are midpoints between consecutive distinct sorted values
(a binary 0/1 feature therefore splits at 0.5); rows with value below the
threshold go left. A node becomes a leaf at the depth cap, when it holds
fewer than min_node rows, or when no sampled feature offers a positive-gain
split. Node cover (training rows reaching the node, counted with bootstrap
multiplicity) is stored for the path-dependent SHAP attribution.

Growth is exact greedy, breadth-first: the feature columns are argsorted
once per fit, and bootstrap/subsample draws enter as per-row integer
multiplicities, so each level is a single weighted pass over the sorted
columns with per-node running sums. The level kernel is numba-compiled
when available and runs as plain Python otherwise (same code, same
results). Per-split feature subsets come from ranking draws of the
caller's seeded generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not args or not callable(args[0]) else args[0]

LEAF = -1
MIN_GAIN = 1e-12
MODE_VARIANCE = 0
MODE_XGB = 1


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    def predict_row(self, x: np.ndarray) -> float:
        node = 0
        while self.feature[node] != LEAF:
            node = self.left[node] if x[self.feature[node]] < self.threshold[node] \
                else self.right[node]
        return float(self.value[node])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.where(active)[0]
            nd = node[idx]
            goes_left = X[idx, self.feature[nd]] < self.threshold[nd]
            node[idx] = np.where(goes_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return self.value[node]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def max_depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.n_nodes else 0

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(),
                "threshold": [None if math.isnan(t) else t for t in self.threshold],
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "cover": self.cover.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        thr = np.array([math.nan if t is None else t for t in d["threshold"]],
                       dtype=np.float64)
        return cls(np.array(d["feature"], dtype=np.int64), thr,
                   np.array(d["left"], dtype=np.int64),
                   np.array(d["right"], dtype=np.int64),
                   np.array(d["value"], dtype=np.float64),
                   np.array(d["cover"], dtype=np.float64))


def presort(X: np.ndarray) -> np.ndarray:
    """Per-feature stable argsort, computed once per fit and shared by all
    trees."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").astype(np.int64))


@njit(cache=True)
def _level_pass(X, stat, hess, mult, order, pos, local, feat_allowed, mode,
                lam, gamma_split,
                node_sum_s, node_sum_h, node_sum_sq, node_count,
                best_gain, best_feat, best_thr,
                run_s, run_h, run_sq, run_cnt, prev_val):
    """One weighted pass over every presorted feature column, maintaining
    running left-side sums per active node; records each node's best split."""
    n, p = X.shape
    n_active = run_s.shape[0]
    for f in range(p):
        for li in range(n_active):
            run_s[li] = 0.0
            run_h[li] = 0.0
            run_sq[li] = 0.0
            run_cnt[li] = 0.0
        for idx in range(n):
            r = order[idx, f]
            w = mult[r]
            if w == 0:
                continue
            nd = pos[r]
            if nd < 0:
                continue
            li = local[nd]
            if li < 0 or not feat_allowed[li, f]:
                continue
            v = X[r, f]
            if run_cnt[li] > 0 and v > prev_val[li]:
                nl = run_cnt[li]
                nr = node_count[li] - nl
                if nr >= 1.0:
                    if mode == MODE_VARIANCE:
                        sse_l = run_sq[li] - run_s[li] * run_s[li] / nl
                        rs = node_sum_s[li] - run_s[li]
                        sse_r = (node_sum_sq[li] - run_sq[li]) - rs * rs / nr
                        parent = (node_sum_sq[li]
                                  - node_sum_s[li] * node_sum_s[li] / node_count[li])
                        gain = parent - sse_l - sse_r
                        ok = gain > MIN_GAIN
                    else:
                        gl = run_s[li]
                        hl = run_h[li]
                        gr = node_sum_s[li] - gl
                        hr = node_sum_h[li] - hl
                        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam)
                                      - node_sum_s[li] * node_sum_s[li]
                                      / (node_sum_h[li] + lam)) - gamma_split
                        ok = gain > 0.0
                    if ok and gain > best_gain[li]:
                        best_gain[li] = gain
                        best_feat[li] = f
                        best_thr[li] = (prev_val[li] + v) / 2.0
            run_s[li] += stat[r] * w
            run_h[li] += hess[r] * w
            if mode == MODE_VARIANCE:
                run_sq[li] += stat[r] * stat[r] * w
            run_cnt[li] += w
            prev_val[li] = v


def _grow(X, stat, hess, mult, order, rng, mode, max_depth, min_node,
          feature_fraction, lam, gamma_split) -> Tree:
    n, p = X.shape
    k = max(1, math.ceil(feature_fraction * p))
    if max_depth < 60:
        cap = min(2 * int(mult.sum()) + 1, 2 ** (max_depth + 1) + 1)
    else:
        cap = 2 * int(mult.sum()) + 1

    pos = np.where(mult > 0, 0, -1).astype(np.int64)
    fmult = mult.astype(np.float64)

    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.full(cap, np.nan, dtype=np.float64)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    cover = np.zeros(cap, dtype=np.float64)

    def node_stats(nodes):
        loc = np.full(cap, -1, dtype=np.int64)
        loc[np.asarray(nodes, dtype=np.int64)] = np.arange(len(nodes))
        live = pos >= 0
        li = loc[pos[live]]
        w = fmult[live]
        sum_s = np.zeros(len(nodes))
        sum_h = np.zeros(len(nodes))
        sum_sq = np.zeros(len(nodes))
        count = np.zeros(len(nodes))
        np.add.at(sum_s, li, stat[live] * w)
        np.add.at(sum_h, li, hess[live] * w)
        if mode == MODE_VARIANCE:
            np.add.at(sum_sq, li, stat[live] * stat[live] * w)
        np.add.at(count, li, w)
        return sum_s, sum_h, sum_sq, count

    n_nodes = 1
    level_nodes = [0]
    for depth in range(max_depth + 1):
        sum_s, sum_h, sum_sq, count = node_stats(level_nodes)
        for i, node in enumerate(level_nodes):
            if mode == MODE_VARIANCE:
                value[node] = sum_s[i] / count[i]
            else:
                value[node] = -sum_s[i] / (sum_h[i] + lam)
            cover[node] = count[i]
        if depth >= max_depth:
            break
        active = [i for i, node in enumerate(level_nodes)
                  if count[i] >= max(min_node, 2)]
        if not active:
            break

        n_active = len(active)
        local = np.full(cap, -1, dtype=np.int64)
        for a, i in enumerate(active):
            local[level_nodes[i]] = a
        if k < p:
            feat_allowed = np.zeros((n_active, p), dtype=np.bool_)
            for a in range(n_active):
                draws = rng.random(p)
                feat_allowed[a, np.argsort(draws, kind="stable")[:k]] = True
        else:
            feat_allowed = np.ones((n_active, p), dtype=np.bool_)

        act = np.asarray(active)
        best_gain = np.zeros(n_active)
        best_feat = np.full(n_active, -1, dtype=np.int64)
        best_thr = np.zeros(n_active)
        _level_pass(X, stat, hess, mult, order, pos, local, feat_allowed, mode,
                    lam, gamma_split,
                    sum_s[act], sum_h[act], sum_sq[act], count[act],
                    best_gain, best_feat, best_thr,
                    np.zeros(n_active), np.zeros(n_active), np.zeros(n_active),
                    np.zeros(n_active), np.zeros(n_active))

        next_nodes = []
        split_of = {}
        for a, i in enumerate(active):
            if best_feat[a] < 0:
                continue
            node = level_nodes[i]
            feature[node] = best_feat[a]
            threshold[node] = best_thr[a]
            left[node] = n_nodes
            right[node] = n_nodes + 1
            next_nodes.extend((n_nodes, n_nodes + 1))
            split_of[node] = (int(best_feat[a]), float(best_thr[a]),
                              n_nodes, n_nodes + 1)
            n_nodes += 2
        if not split_of:
            break
        for node in level_nodes:
            if node not in split_of:
                pos[pos == node] = -1  # finalized leaf; rows drop out
        for node, (f, thr, lid, rid) in split_of.items():
            mask = pos == node
            goes_left = X[mask, f] < thr
            sub = np.where(mask)[0]
            pos[sub[goes_left]] = lid
            pos[sub[~goes_left]] = rid
        level_nodes = next_nodes

    return Tree(feature[:n_nodes].copy(), threshold[:n_nodes].copy(),
                left[:n_nodes].copy(), right[:n_nodes].copy(),
                value[:n_nodes].copy(), cover[:n_nodes].copy())


def _prep(X, stat, hess, mult, order):
    X = np.ascontiguousarray(X, dtype=np.float64)
    stat = np.ascontiguousarray(stat, dtype=np.float64)
    hess = np.ascontiguousarray(hess, dtype=np.float64)
    mult = (np.ones(len(X), dtype=np.int64) if mult is None
            else np.ascontiguousarray(mult, dtype=np.int64))
    order = presort(X) if order is None else order
    return X, stat, hess, mult, order


def grow_variance_tree(X, y, rng, max_depth, min_node, feature_fraction,
                       mult=None, order=None) -> Tree:
    """CART-style tree: splits maximize the drop in child SSE, leaves
    predict the node mean."""
    X, y, hess, mult, order = _prep(X, y, np.ones(len(y)), mult, order)
    return _grow(X, y, hess, mult, order, rng, MODE_VARIANCE, max_depth,
                 min_node, feature_fraction, 0.0, 0.0)


def grow_xgb_tree(X, grad, hess, rng, max_depth, min_node, feature_fraction,
                  lam, gamma_split, mult=None, order=None) -> Tree:
    """Regularized boosting tree: leaf weight -G/(H+lam); split gain
    (1/2)[GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)] - gamma_split,
    non-positive gains rejected."""
    X, grad, hess, mult, order = _prep(X, grad, hess, mult, order)
    return _grow(X, grad, hess, mult, order, rng, MODE_XGB, max_depth,
                 min_node, feature_fraction, lam, gamma_split)
