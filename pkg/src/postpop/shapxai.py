"""Exact Shapley attributions for the tree ensembles (path-dependent
formulation), mean-|phi| covariate ranking, and dependence-plot data export.

Per tree the attribution follows the polynomial-time path algorithm: a
path of (feature, zero fraction, one fraction, permutation weight)
entries is extended at every split and unwound at leaves, with the
cover counts stored in the trees providing the conditional-expectation
weights. Ensemble attributions add per-tree results with the same
scaling the ensembles use to predict: the tree average for the forest,
base score plus learning-rate-scaled sum for boosting. Local accuracy
(base value plus the phi sum reconstructs the prediction) is exact up
to floating point for every row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modelzoo.boosting import XgbModel
from .modelzoo.forest import ForestModel
from .modelzoo.tree import LEAF, Tree

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not args or not callable(args[0]) else args[0]


@dataclass(frozen=True)
class ShapAttribution:
    phi: np.ndarray
    base_value: float

    def total(self) -> float:
        return self.base_value + float(self.phi.sum())


@dataclass(frozen=True)
class ImportanceRanking:
    entries: tuple  # (feature_name, mean_abs_phi) sorted descending


class SchemaMismatchError(ValueError):
    pass


@njit(cache=True)
def _path_sum(pf, pz, po, pw, off, ud, i):
    one = po[off + i]
    zero = pz[off + i]
    next_one = pw[off + ud]
    total = 0.0
    if one != 0.0:
        for j in range(ud - 1, -1, -1):
            tmp = next_one / ((j + 1) * one)
            total += tmp
            next_one = pw[off + j] - tmp * zero * (ud - j)
    else:
        for j in range(ud - 1, -1, -1):
            total += pw[off + j] / (zero * (ud - j))
    return total * (ud + 1)


@njit(cache=True)
def _unwind(pf, pz, po, pw, off, ud, i):
    one = po[off + i]
    zero = pz[off + i]
    next_one = pw[off + ud]
    for j in range(ud - 1, -1, -1):
        if one != 0.0:
            tmp = pw[off + j]
            pw[off + j] = next_one * (ud + 1) / ((j + 1) * one)
            next_one = tmp - pw[off + j] * zero * (ud - j) / (ud + 1)
        else:
            pw[off + j] = pw[off + j] * (ud + 1) / (zero * (ud - j))
    for j in range(i, ud):
        pf[off + j] = pf[off + j + 1]
        pz[off + j] = pz[off + j + 1]
        po[off + j] = po[off + j + 1]


@njit(cache=True)
def _tree_shap_row(children_left, children_right, feature, threshold, cover,
                   value, max_depth, x, phi):
    buf = (max_depth + 3) * (max_depth + 4) // 2 + 4
    pf = np.full(buf, -1, dtype=np.int64)
    pz = np.zeros(buf)
    po = np.zeros(buf)
    pw = np.zeros(buf)
    cap = max_depth + 4
    st_node = np.empty(cap, dtype=np.int64)
    st_ud = np.empty(cap, dtype=np.int64)
    st_poff = np.empty(cap, dtype=np.int64)
    st_pz = np.empty(cap)
    st_po = np.empty(cap)
    st_pfi = np.empty(cap, dtype=np.int64)

    top = 0
    st_node[0] = 0
    st_ud[0] = 0
    st_poff[0] = 0
    st_pz[0] = 1.0
    st_po[0] = 1.0
    st_pfi[0] = -1
    top = 1
    while top > 0:
        top -= 1
        node = st_node[top]
        ud = st_ud[top]
        poff = st_poff[top]
        pzf = st_pz[top]
        pof = st_po[top]
        pfi = st_pfi[top]

        off = poff + ud + 1
        for i in range(ud):
            pf[off + i] = pf[poff + i]
            pz[off + i] = pz[poff + i]
            po[off + i] = po[poff + i]
            pw[off + i] = pw[poff + i]
        # extend the path with the incoming split
        pf[off + ud] = pfi
        pz[off + ud] = pzf
        po[off + ud] = pof
        pw[off + ud] = 1.0 if ud == 0 else 0.0
        for i in range(ud - 1, -1, -1):
            pw[off + i + 1] += pof * pw[off + i] * (i + 1) / (ud + 1)
            pw[off + i] = pzf * pw[off + i] * (ud - i) / (ud + 1)

        if feature[node] == LEAF:
            for i in range(1, ud + 1):
                w = _path_sum(pf, pz, po, pw, off, ud, i)
                phi[pf[off + i]] += w * (po[off + i] - pz[off + i]) * value[node]
            continue

        f = feature[node]
        if x[f] < threshold[node]:
            hot, cold = children_left[node], children_right[node]
        else:
            hot, cold = children_right[node], children_left[node]
        hot_zero = cover[hot] / cover[node]
        cold_zero = cover[cold] / cover[node]
        iz = 1.0
        io = 1.0
        k = -1
        for i in range(ud + 1):
            if pf[off + i] == f:
                k = i
                break
        ud_eff = ud
        if k >= 0:
            iz = pz[off + k]
            io = po[off + k]
            _unwind(pf, pz, po, pw, off, ud_eff, k)
            ud_eff -= 1

        st_node[top] = cold
        st_ud[top] = ud_eff + 1
        st_poff[top] = off
        st_pz[top] = cold_zero * iz
        st_po[top] = 0.0
        st_pfi[top] = f
        top += 1
        st_node[top] = hot
        st_ud[top] = ud_eff + 1
        st_poff[top] = off
        st_pz[top] = hot_zero * iz
        st_po[top] = io
        st_pfi[top] = f
        top += 1


def tree_expected_value(tree: Tree) -> float:
    """Cover-weighted mean of leaf values (the tree's output on the
    training distribution)."""
    total = 0.0
    stack = [(0, 1.0)]
    while stack:
        node, w = stack.pop()
        if tree.feature[node] == LEAF:
            total += w * tree.value[node]
            continue
        l, r = tree.left[node], tree.right[node]
        stack.append((l, w * tree.cover[l] / tree.cover[node]))
        stack.append((r, w * tree.cover[r] / tree.cover[node]))
    return total


def _single_tree_phi(tree: Tree, x: np.ndarray, n_features: int) -> np.ndarray:
    phi = np.zeros(n_features)
    _tree_shap_row(tree.left, tree.right, tree.feature, tree.threshold,
                   tree.cover, tree.value, tree.max_depth(), x, phi)
    return phi


def _ensemble_parts(model):
    if isinstance(model, ForestModel):
        return model.trees, 1.0 / len(model.trees), 0.0
    if isinstance(model, XgbModel):
        return model.trees, model.params.rho, model.base_score
    raise TypeError(f"tree attribution supports rf and xgb models, not "
                    f"{type(model).__name__}")


def tree_shap(model, x: np.ndarray) -> ShapAttribution:
    """Exact path-dependent Shapley attribution of one row."""
    trees, scale, offset = _ensemble_parts(model)
    x = np.asarray(x, dtype=np.float64)
    n_features = len(model.column_names)
    if x.shape != (n_features,):
        raise SchemaMismatchError(
            f"row has shape {x.shape}, model expects ({n_features},)")
    phi = np.zeros(n_features)
    base = offset
    for t in trees:
        phi += scale * _single_tree_phi(t, x, n_features)
        base += scale * tree_expected_value(t)
    return ShapAttribution(phi, float(base))


def shap_values(model, X: np.ndarray) -> tuple[np.ndarray, float]:
    """Attributions for every row of X: (n, p) phi matrix plus the shared
    base value."""
    trees, scale, offset = _ensemble_parts(model)
    X = np.asarray(X, dtype=np.float64)
    n_features = len(model.column_names)
    if X.shape[1] != n_features:
        raise SchemaMismatchError(
            f"matrix has {X.shape[1]} columns, model expects {n_features}")
    phi = np.zeros((len(X), n_features))
    depths = [t.max_depth() for t in trees]
    for t, d in zip(trees, depths):
        for i in range(len(X)):
            row_phi = np.zeros(n_features)
            _tree_shap_row(t.left, t.right, t.feature, t.threshold,
                           t.cover, t.value, d, X[i], row_phi)
            phi[i] += scale * row_phi
    base = offset + scale * sum(tree_expected_value(t) for t in trees)
    return phi, float(base)


def mean_abs_shap(model, X: np.ndarray, exclude=()) -> ImportanceRanking:
    """Features ranked by mean |phi| over the rows of X; excluded names
    (typically the user dummies) are dropped before ranking."""
    if len(np.asarray(X)) == 0:
        raise ValueError("empty matrix")
    phi, _ = shap_values(model, X)
    means = np.mean(np.abs(phi), axis=0)
    entries = [(name, float(means[j])) for j, name in enumerate(model.column_names)
               if name not in set(exclude)]
    entries.sort(key=lambda e: (-e[1], e[0]))
    return ImportanceRanking(tuple(entries))


def exclude_user_dummies(column_names) -> list[str]:
    return [c for c in column_names if c.startswith("user_")]


def dependence_data(model, X: np.ndarray, feature: str) -> list[tuple[float, float]]:
    """(feature value, phi) per row, ordered by feature value."""
    if feature not in model.column_names:
        raise ValueError(f"unknown feature {feature!r}")
    j = model.column_names.index(feature)
    phi, _ = shap_values(model, X)
    pairs = [(float(X[i, j]), float(phi[i, j])) for i in range(len(X))]
    pairs.sort(key=lambda p: p[0])
    return pairs
