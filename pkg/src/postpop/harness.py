"""Hierarchical cross-validation over the four-setting x six-method grid.

Outer folds are user-stratified: each user's rows are shuffled and dealt
round-robin, so per-user fold counts differ by at most one. Parameter
search runs on inner folds built the same way from the training rows only.
Topic models, period medians, and (inside the fits) standardization
statistics are always refit per outer fold on training rows; the
preprocessing hash recorded per fold certifies that those inputs are a
function of training rows alone.

Every randomized component draws from a stream keyed on
(root seed, fold, setting, method), so dropping a method or setting from a
run leaves every other cell bit-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import colorlab, features, topiclab, vision
from .corpus import CAPTION_TOPIC_NAMES, Corpus, LABEL_TOPIC_NAMES
from .features import SETTINGS, FeatureMatrix, ResponseVector, TopicBits
from .modelzoo import (Dataset, ForestParams, LmmSpec, MlpParams, SvrParams,
                       XgbParams, fit_lmm, fit_mlp, fit_ols, fit_rf, fit_svr,
                       fit_xgb, predict_with_groups)
from .modelzoo.metrics import mae as mae_metric
from .modelzoo.metrics import rmse as rmse_metric

log = logging.getLogger(__name__)

DEFAULT_K_OUTER = 6
DEFAULT_K_INNER = 5
METHOD_IDS = {"lm": 0, "lmm": 1, "svr": 2, "mlp": 3, "rf": 4, "xgb": 5}
SETTING_IDS = {s: i for i, s in enumerate(SETTINGS)}


# ---------------------------------------------------------------------------
# fold construction

@dataclass(frozen=True)
class FoldPlan:
    k_outer: int
    assignments: np.ndarray  # fold index per row
    rng_seed: int

    def test_rows(self, fold: int) -> np.ndarray:
        return np.where(self.assignments == fold)[0]

    def train_rows(self, fold: int) -> np.ndarray:
        return np.where(self.assignments != fold)[0]


def hierarchical_folds(groups, k_outer: int, rng_seed: int) -> FoldPlan:
    """Per user: shuffle that user's rows and deal them round-robin into
    k_outer folds. Errors if any user has fewer rows than k_outer."""
    groups = np.asarray(groups)
    if k_outer < 1:
        raise ValueError("k_outer must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 0xF01D]))
    assignments = np.full(len(groups), -1, dtype=np.int64)
    for user in np.unique(groups):
        rows = np.where(groups == user)[0]
        if len(rows) < k_outer:
            raise ValueError(f"user {user} has {len(rows)} rows, fewer than "
                             f"k_outer={k_outer}")
        perm = rng.permutation(len(rows))
        for i, r in enumerate(rows[perm]):
            assignments[r] = i % k_outer
    return FoldPlan(k_outer, assignments, rng_seed)


# ---------------------------------------------------------------------------
# parameter grids

@dataclass
class GridSpec:
    method: str
    grid: dict[str, list] = field(default_factory=dict)

    def cells(self) -> list[dict]:
        if not self.grid:
            return [{}]
        names = list(self.grid)
        out = [dict(zip(names, combo))
               for combo in itertools.product(*(self.grid[n] for n in names))]
        if not out:
            raise ValueError("empty parameter grid")
        return out


def desk_params(method: str, setting: str):
    """Laptop-scale single-cell defaults used by the default cv run."""
    if method == "svr":
        return SvrParams(C=10.0, epsilon=0.1, gamma=0.01)
    if method == "mlp":
        return MlpParams(hidden_sizes=(64, 32, 32, 16, 64), learning_rate=0.003,
                         epochs=120)
    if method == "rf":
        return ForestParams(B=80, d=12, v=0.7, m=5, s=1.0)
    if method == "xgb":
        return XgbParams(B=300, d=6, v=0.8, m=5, s=0.8, rho=0.07)
    return None


def desk_grids(methods, settings) -> dict:
    """Single-cell grid per method: the desk parameters, no search."""
    return {m: GridSpec(m) for m in methods}


def paper_grids(methods, settings) -> dict:
    """Replication-scale grids: the selected values as midpoints with one
    coarser and one finer neighbor on each method's two headline
    parameters (full per-parameter crosses would not finish at desk
    scale)."""
    from .modelzoo.defaults import paper_params
    grids = {}
    for m in methods:
        if m == "svr":
            grids[m] = GridSpec(m, {"C": [0.5, 1.0, 2.0], "gamma": [0.5, 1.0, 2.0]})
        elif m == "xgb":
            grids[m] = GridSpec(m, {"d": [0.5, 1.0, 1.5], "rho": [0.5, 1.0, 2.0]})
        elif m == "rf":
            grids[m] = GridSpec(m, {"d": [0.5, 1.0, 1.5], "v": [0.75, 1.0, 1.25]})
        else:
            grids[m] = GridSpec(m)
    return grids


def _scale_param(base_value, factor):
    if isinstance(base_value, int):
        return max(1, int(round(base_value * factor)))
    return min(1.0, base_value * factor) if base_value <= 1.0 else base_value * factor


def cell_params(method: str, setting: str, overrides: dict, rng_seed: int,
                paper: bool = False):
    """Concrete parameter object for one grid cell.

    Override values are multiplicative factors applied to the base value
    when the base came from a grid built by paper_grids (so the same grid
    works across settings); absolute values otherwise.
    """
    from .modelzoo.defaults import paper_params as paper_defaults
    base = paper_defaults(method, setting) if paper else desk_params(method, setting)
    if base is None:
        if method == "lmm":
            return LmmSpec()
        return None
    updates = {}
    for name, value in overrides.items():
        current = getattr(base, name)
        if paper:
            updates[name] = _scale_param(current, value)
        else:
            updates[name] = value
    if hasattr(base, "rng_seed"):
        updates["rng_seed"] = rng_seed
    return dataclasses.replace(base, **updates) if updates else base


def derive_seed(root: int, *parts: int) -> int:
    return int(np.random.SeedSequence([root, *parts]).generate_state(1)[0])


# Hour and Season enter the matrix as full one-hots (each row sums to 1),
# which is collinear with an intercept; the linear fits drop one reference
# level per group. Tree and kernel methods keep the full matrix.
LINEAR_REFERENCE_DROP = ("hour_00_03", "season_spring")


def linear_view(data: Dataset) -> Dataset:
    keep = [i for i, c in enumerate(data.column_names)
            if c not in LINEAR_REFERENCE_DROP]
    return Dataset(data.X[:, keep], data.y, data.groups,
                   tuple(data.column_names[i] for i in keep))


def _linear_test_matrix(X: np.ndarray, column_names) -> np.ndarray:
    keep = [i for i, c in enumerate(column_names)
            if c not in LINEAR_REFERENCE_DROP]
    return X[:, keep]


def _fit_cell(method: str, data: Dataset, params):
    if method == "lm":
        return fit_ols(linear_view(data))
    if method == "lmm":
        return fit_lmm(linear_view(data), params, tol=1e-6, max_iter=2500)
    if method == "svr":
        return fit_svr(data, params, tol=1e-3, max_iter=400_000)
    if method == "mlp":
        return fit_mlp(data, params)
    if method == "rf":
        return fit_rf(data, params)
    if method == "xgb":
        return fit_xgb(data, params)
    raise ValueError(f"unknown method {method!r}")


def _predict_cell(method: str, model, X: np.ndarray, column_names, groups):
    if method in ("lm", "lmm"):
        X = _linear_test_matrix(X, column_names)
    return predict_with_groups(model, X, groups)


def grid_search(data: Dataset, method: str, spec: GridSpec, setting: str,
                k_inner: int = DEFAULT_K_INNER, rng_seed: int = 0,
                paper: bool = False) -> dict:
    """Pick the cell with minimal mean inner-fold RMSE (ties: first cell in
    enumeration order). Failed cells score +inf and are logged. A
    single-cell grid returns that cell without fitting."""
    cells = spec.cells()
    if len(cells) == 1:
        return cells[0]
    plan = hierarchical_folds(data.groups, k_inner, derive_seed(rng_seed, 0x1A))
    best_cell, best_score = None, math.inf
    for cell in cells:
        scores = []
        for fold in range(k_inner):
            tr, te = plan.train_rows(fold), plan.test_rows(fold)
            try:
                params = cell_params(method, setting, cell,
                                     derive_seed(rng_seed, 0x2B, fold), paper)
                model = _fit_cell(method, data.subset(tr), params)
                pred = _predict_cell(method, model, data.X[te],
                                     data.column_names, data.groups[te])
                scores.append(rmse_metric(pred, data.y[te]))
            except Exception as exc:
                log.warning("grid cell %s failed on inner fold %d: %s",
                            cell, fold, exc)
                scores.append(math.inf)
        mean_score = float(np.mean(scores))
        if mean_score < best_score:
            best_cell, best_score = cell, mean_score
    return best_cell if best_cell is not None else cells[0]


# ---------------------------------------------------------------------------
# per-fold preprocessing (topic models, colors, medians)

@dataclass
class TopicConfig:
    caption_alpha: float = 10.0
    caption_beta: float = 10.0
    label_alpha: float = 10.0
    label_beta: float = 0.1
    seed_boost_factor: float = topiclab.DEFAULT_SEED_BOOST_FACTOR
    n_sweeps: int = topiclab.DEFAULT_N_SWEEPS
    binarize_threshold: float | None = None  # None = 1/K
    refit_per_fold: bool = True


def caption_documents(corpus: Corpus, post_ids) -> list[list[str]]:
    return [topiclab.tokenize_caption(corpus.post_by_id(p).caption) for p in post_ids]


def label_documents(corpus: Corpus, post_ids) -> tuple[list[list[str]], list[str]]:
    """One document per image (filtered labels), plus the owning post id."""
    docs, owners = [], []
    for pid in post_ids:
        for ann in corpus.annotations[pid]:
            docs.append(vision.filter_labels(ann))
            owners.append(pid)
    return docs, owners


def color_vectors(corpus: Corpus, post_ids) -> dict[str, tuple[int, ...]]:
    out = {}
    for pid in post_ids:
        hues = [colorlab.rgb_to_munsell_hue(vision.representative_color(a))
                for a in corpus.annotations[pid]]
        out[pid] = colorlab.post_color_vector(hues)
    return out


def preprocessing_hash(corpus: Corpus, train_post_ids) -> str:
    """Digest of everything the fold's fitted preprocessing may depend on:
    the training post ids, their caption/label documents, and their
    periods. Any change to non-training rows leaves this unchanged."""
    h = hashlib.sha256()
    periods = features.user_periods(corpus)
    for pid in sorted(train_post_ids):
        post = corpus.post_by_id(pid)
        h.update(pid.encode())
        h.update(post.caption.encode())
        for ann in corpus.annotations[pid]:
            h.update("\x1f".join(vision.filter_labels(ann)).encode())
        h.update(repr(periods[pid]).encode())
        h.update(repr(post.user_id).encode())
    return h.hexdigest()


@dataclass
class FoldFeatures:
    caption_bits: TopicBits
    label_bits: TopicBits
    colors: dict
    medians: dict
    preprocessing_hash: str


def fold_features(corpus: Corpus, seeds: dict, train_post_ids, all_post_ids,
                  cfg: TopicConfig, rng_seed: int) -> FoldFeatures:
    """Fit both topic models on the training posts and binarize topic
    posteriors for every post (fold-in for unseen ones)."""
    caption_spec = topiclab.SeedSpec.from_dict(seeds["caption"])
    label_spec = topiclab.SeedSpec.from_dict(seeds["label"])
    train_ids = list(train_post_ids)
    train_set = set(train_ids)

    cap_docs = caption_documents(corpus, train_ids)
    cap_vocab = topiclab.build_vocabulary(cap_docs)
    cap_state = topiclab.fit_seeded_lda(
        cap_docs, cap_vocab, caption_spec, cfg.caption_alpha, cfg.caption_beta,
        cfg.seed_boost_factor * cfg.caption_beta, cfg.n_sweeps,
        derive_seed(rng_seed, 0xCA))

    lab_docs, owners = label_documents(corpus, train_ids)
    lab_vocab = topiclab.build_vocabulary(lab_docs)
    lab_state = topiclab.fit_seeded_lda(
        lab_docs, lab_vocab, label_spec, cfg.label_alpha, cfg.label_beta,
        cfg.seed_boost_factor * cfg.label_beta, cfg.n_sweeps,
        derive_seed(rng_seed, 0x1B))

    cap_bits, lab_bits = {}, {}
    train_pos = {pid: i for i, pid in enumerate(train_ids)}
    for pid in all_post_ids:
        if pid in train_set:
            theta_cap = topiclab.doc_topic_posterior(cap_state, train_pos[pid])
        else:
            theta_cap = topiclab.doc_topic_posterior(
                cap_state, topiclab.tokenize_caption(corpus.post_by_id(pid).caption))
        cap_bits[pid] = topiclab.binarize_topics(theta_cap, cfg.binarize_threshold)

    img_theta: dict[str, list] = {pid: [] for pid in all_post_ids}
    for i, (doc, owner) in enumerate(zip(lab_docs, owners)):
        img_theta[owner].append(topiclab.doc_topic_posterior(lab_state, i))
    for pid in all_post_ids:
        if pid not in train_set:
            for ann in corpus.annotations[pid]:
                img_theta[pid].append(
                    topiclab.doc_topic_posterior(lab_state, vision.filter_labels(ann)))
    for pid in all_post_ids:
        mean_theta = topiclab.aggregate_post_topics(img_theta[pid])
        lab_bits[pid] = topiclab.binarize_topics(mean_theta, cfg.binarize_threshold)

    return FoldFeatures(
        caption_bits=TopicBits(tuple(caption_spec.topic_names), cap_bits),
        label_bits=TopicBits(tuple(label_spec.topic_names), lab_bits),
        colors=color_vectors(corpus, all_post_ids),
        medians=features.period_medians(corpus, train_ids),
        preprocessing_hash=preprocessing_hash(corpus, train_ids),
    )


# ---------------------------------------------------------------------------
# the evaluation grid

@dataclass
class CellResult:
    setting: str
    method: str
    rmse: float
    mae: float
    fold_rmse: list
    fold_mae: list
    chosen: list
    failures: list

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class CVResult:
    cells: dict
    k_outer: int
    rng_seed: int
    audit: list

    def cell(self, setting: str, method: str) -> CellResult:
        return self.cells[(setting, method)]

    def to_json(self) -> dict:
        return {
            "k_outer": self.k_outer,
            "rng_seed": self.rng_seed,
            "audit": self.audit,
            "cells": [c.to_json() for c in self.cells.values()],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CVResult":
        cells = {}
        for c in doc["cells"]:
            cells[(c["setting"], c["method"])] = CellResult(**c)
        return cls(cells, doc["k_outer"], doc["rng_seed"], doc["audit"])


def evaluate_grid(corpus: Corpus, seeds: dict, settings, methods, grids,
                  k_outer: int = DEFAULT_K_OUTER, rng_seed: int = 0,
                  topic_cfg: TopicConfig | None = None, k_inner: int = DEFAULT_K_INNER,
                  paper: bool = False) -> CVResult:
    """Outer-fold evaluation of every (setting, method) cell.

    Per outer fold the topic models are refit on training posts (unless
    topic_cfg.refit_per_fold is off, for replication of a single global
    fit), matrices are rebuilt per setting, the method's grid is searched
    on inner folds of the training rows, and the refit model scores the
    held-out fold. Cell failures are recorded and skipped, not raised.
    """
    topic_cfg = topic_cfg or TopicConfig()
    posts = features.ordered_posts(corpus)
    post_ids = [p.post_id for p in posts]
    groups = np.array([p.user_id for p in posts])
    plan = hierarchical_folds(groups, k_outer, derive_seed(rng_seed, 0x0F))

    results = {(s, m): CellResult(s, m, math.nan, math.nan, [], [], [], [])
               for s in settings for m in methods}
    audit = []

    global_features = None
    if not topic_cfg.refit_per_fold:
        global_features = fold_features(corpus, seeds, post_ids, post_ids,
                                        topic_cfg, derive_seed(rng_seed, 0x70))

    for fold in range(k_outer):
        train_idx = plan.train_rows(fold)
        test_idx = plan.test_rows(fold)
        train_ids = [post_ids[i] for i in train_idx]
        test_ids = [post_ids[i] for i in test_idx]
        if topic_cfg.refit_per_fold:
            ff = fold_features(corpus, seeds, train_ids, post_ids, topic_cfg,
                               derive_seed(rng_seed, 0x70, fold))
        else:
            ff = global_features
        audit.append({"fold": fold, "n_train": len(train_ids),
                      "n_test": len(test_ids),
                      "preprocessing_hash": preprocessing_hash(corpus, train_ids)})

        for setting in settings:
            X_tr, y_tr = features.build_matrix(
                corpus, ff.caption_bits, ff.label_bits, ff.colors, setting,
                post_ids=train_ids, medians=ff.medians)
            X_te, y_te = features.build_matrix(
                corpus, ff.caption_bits, ff.label_bits, ff.colors, setting,
                post_ids=test_ids, medians=ff.medians)
            train_data = Dataset(X_tr.rows, y_tr.values, X_tr.group_labels,
                                 X_tr.column_names)
            for method in methods:
                cell = results[(setting, method)]
                seed = derive_seed(rng_seed, fold, SETTING_IDS[setting],
                                   METHOD_IDS[method])
                try:
                    spec = grids.get(method) or GridSpec(method)
                    chosen = grid_search(train_data, method, spec, setting,
                                         k_inner=k_inner, rng_seed=seed,
                                         paper=paper)
                    params = cell_params(method, setting, chosen, seed, paper)
                    model = _fit_cell(method, train_data, params)
                    pred = _predict_cell(method, model, X_te.rows,
                                         X_te.column_names, X_te.group_labels)
                    cell.fold_rmse.append(rmse_metric(pred, y_te.values))
                    cell.fold_mae.append(mae_metric(pred, y_te.values))
                    cell.chosen.append(chosen)
                except Exception as exc:
                    log.warning("cell (%s, %s) failed on fold %d: %s",
                                setting, method, fold, exc)
                    cell.failures.append(f"fold {fold}: {exc}")

    for cell in results.values():
        if cell.fold_rmse:
            cell.rmse = float(np.mean(cell.fold_rmse))
            cell.mae = float(np.mean(cell.fold_mae))
        else:
            cell.rmse = math.inf
            cell.mae = math.inf
    return CVResult(results, k_outer, rng_seed, audit)


def report_tables(result: CVResult, settings, methods) -> dict:
    """Rows = methods, columns = settings, one table per metric."""
    tables = {}
    for metric in ("rmse", "mae"):
        rows = []
        for m in methods:
            row = {"method": m}
            for s in settings:
                cell = result.cells.get((s, m))
                row[s] = getattr(cell, metric) if cell else None
            rows.append(row)
        tables[metric] = rows
    return tables


# ---------------------------------------------------------------------------
# preliminary nested regressions

PRELIM_COMMON_COLUMNS = (
    "public", "n_images", "n_reels", "tagged_place", "n_tagged_ids",
    "n_hashtags", "holiday", "weekdays", "period_hours", "period_missing",
    "time_difference",
)


def preliminary_regressions(corpus: Corpus, seeds: dict,
                            topic_cfg: TopicConfig | None = None,
                            rng_seed: int = 0) -> list[tuple[float, float]]:
    """Three nested in-sample least-squares fits: commonly used variables,
    plus user dummies, plus the annotation-derived topic/color variables.
    Returns (r_squared, adjusted r_squared) per model."""
    topic_cfg = topic_cfg or TopicConfig()
    posts = features.ordered_posts(corpus)
    post_ids = [p.post_id for p in posts]
    ff = fold_features(corpus, seeds, post_ids, post_ids, topic_cfg,
                       derive_seed(rng_seed, 0x9))
    X, y = features.build_matrix(corpus, ff.caption_bits, ff.label_bits,
                                 ff.colors, "all", medians=ff.medians)
    names = X.column_names

    hour_season = [c for c in names if c.startswith(("hour_", "season_"))
                   and c not in LINEAR_REFERENCE_DROP]
    m1_cols = [c for c in names
               if c in PRELIM_COMMON_COLUMNS or c in hour_season]
    user_cols = [c for c in names if c.startswith("user_")]
    api_cols = [c for c in names
                if c.startswith(("caption_topic_", "label_topic_", "color_"))]

    out = []
    for cols in (m1_cols, m1_cols + user_cols, m1_cols + user_cols + api_cols):
        idx = [names.index(c) for c in cols]
        data = Dataset(X.rows[:, idx], y.values, X.group_labels, tuple(cols))
        model = fit_ols(data)
        out.append((model.r_squared, model.adj_r_squared))
    return out
