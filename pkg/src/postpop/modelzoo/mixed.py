"""Linear mixed model with independent (diagonal-covariance) random effects,
fit by EM on the marginal likelihood.

Per group j the model is y_j = X_j beta + Z_j u_j + eps_j with
u_j ~ N(0, D) (D diagonal), eps_j ~ N(0, sigma2 I). Z_j holds an intercept
plus the random-effect columns of the design matrix; covariates named in
LmmSpec.fixed_only, and all user dummies, enter as fixed effects only.

Prediction for a group seen in training adds the BLUP of its random
effects; unseen groups get the fixed part alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import Dataset

# Covariates whose simple one-effect mixed models are singular are fixed-only
# (plus the time difference, which scales the response).
DEFAULT_FIXED_ONLY_PREFIXES = (
    "period_hours", "period_missing", "weekdays", "hour_", "season_",
    "caption_topic_event", "color_g", "color_bg", "time_difference", "user_",
)


class LmmConvergenceError(RuntimeError):
    def __init__(self, n_iter, loglik, rel_change):
        self.n_iter = n_iter
        self.loglik = loglik
        self.rel_change = rel_change
        super().__init__(
            f"EM did not converge in {n_iter} iterations "
            f"(loglik {loglik:.6f}, last relative change {rel_change:.3e})")


@dataclass
class LmmSpec:
    fixed_only: tuple[str, ...] = DEFAULT_FIXED_ONLY_PREFIXES
    random_intercept: bool = True
    random_effect_columns: tuple[str, ...] | None = None  # None = all non-fixed

    def resolve_random_columns(self, column_names) -> list[str]:
        if self.random_effect_columns is not None:
            overlap = set(self.random_effect_columns) & set(self.fixed_only)
            if overlap:
                raise ValueError(f"columns {sorted(overlap)} listed as both fixed-only "
                                 "and random")
            return [c for c in column_names if c in self.random_effect_columns]
        # color_g prefix must not swallow color_gy
        def is_fixed(col):
            for pat in self.fixed_only:
                if col == pat:
                    return True
                if pat.endswith("_") and col.startswith(pat):
                    return True
                if pat in ("color_g", "color_bg") and col == pat:
                    return True
                if pat == "user_" and col.startswith("user_"):
                    return True
            return False
        return [c for c in column_names if not is_fixed(c)]


@dataclass
class LmmModel:
    beta: np.ndarray
    intercept: float
    D: np.ndarray              # random-effect variances (diagonal)
    sigma2: float
    random_columns: tuple[str, ...]
    column_names: tuple[str, ...]
    group_effects: dict        # group -> BLUP vector
    loglik: float
    n_iter: int

    method = "lmm"

    def _z(self, X: np.ndarray) -> np.ndarray:
        idx = [self.column_names.index(c) for c in self.random_columns]
        return np.column_stack([np.ones(len(X))] + [X[:, j] for j in idx])

    def predict(self, X: np.ndarray, groups=None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = self.intercept + X @ self.beta
        if groups is not None:
            Z = self._z(X)
            for i, g in enumerate(np.asarray(groups)):
                u = self.group_effects.get(_gkey(g))
                if u is not None:
                    out[i] += Z[i] @ u
        return out

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(), "intercept": self.intercept,
            "D": self.D.tolist(), "sigma2": self.sigma2,
            "random_columns": list(self.random_columns),
            "column_names": list(self.column_names),
            "group_effects": {str(k): v.tolist() for k, v in self.group_effects.items()},
            "loglik": self.loglik, "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LmmModel":
        return cls(np.array(d["beta"]), d["intercept"], np.array(d["D"]), d["sigma2"],
                   tuple(d["random_columns"]), tuple(d["column_names"]),
                   {k: np.array(v) for k, v in d["group_effects"].items()},
                   d["loglik"], d["n_iter"])


def _gkey(g):
    return str(g)


def marginal_loglik(groups_data, beta, D, sigma2):
    """Sum over groups of the marginal normal log density, computed through
    the q x q Woodbury form so zero variances are harmless."""
    total = 0.0
    sqrtD = np.sqrt(D)
    for X, Z, y in groups_data:
        r = y - X @ beta
        n = len(y)
        B = Z * sqrtD  # Z D^{1/2}
        A = np.eye(len(D)) + (B.T @ B) / sigma2
        sign, logdet_a = np.linalg.slogdet(A)
        Binv_r = np.linalg.solve(A, B.T @ r)
        quad = (r @ r) / sigma2 - (r @ B) @ Binv_r / sigma2 ** 2
        logdet_v = n * math.log(sigma2) + logdet_a
        total += -0.5 * (n * math.log(2 * math.pi) + logdet_v + quad)
    return total


def fit_lmm(data: Dataset, spec: LmmSpec | None = None,
            tol: float = 1e-8, max_iter: int = 1000) -> LmmModel:
    """EM on the marginal maximum likelihood, to relative tolerance tol.

    With no random-effect columns and random_intercept=False the marginal
    model is plain least squares.
    """
    if spec is None:
        spec = LmmSpec()
    names = data.column_names
    rand_cols = spec.resolve_random_columns(names)
    if not spec.random_intercept and not rand_cols:
        return _degenerate_ols(data, spec)
    group_ids = np.unique(data.groups)
    if len(group_ids) < 2:
        raise ValueError("need at least 2 groups")

    rand_idx = [names.index(c) for c in rand_cols]
    q = len(rand_idx) + 1  # leading intercept column in Z

    design = np.column_stack([np.ones(len(data.y)), data.X])
    groups_data = []
    for g in group_ids:
        mask = data.groups == g
        Z = np.column_stack([np.ones(mask.sum())] + [data.X[mask][:, j] for j in rand_idx])
        groups_data.append((design[mask], Z, data.y[mask]))

    # starting values from the pooled least-squares fit
    beta, _, _, _ = np.linalg.lstsq(design, data.y, rcond=None)
    resid = data.y - design @ beta
    var0 = float(resid @ resid) / len(data.y)
    sigma2 = max(var0 / 2.0, 1e-10)
    D = np.full(q, max(var0 / (2.0 * q), 1e-10))
    if not spec.random_intercept:
        D[0] = 0.0

    ll_old = marginal_loglik(groups_data, beta, D, sigma2)
    rel = float("inf")
    n_total = len(data.y)
    for it in range(1, max_iter + 1):
        sqrtD = np.sqrt(D)
        m_list, C_list = [], []
        for X, Z, y in groups_data:
            r = y - X @ beta
            B = Z * sqrtD
            A = np.eye(q) + (B.T @ B) / sigma2
            A_inv = np.linalg.inv(A)
            C = (A_inv * sqrtD).T * sqrtD  # D^{1/2} A^{-1} D^{1/2}
            m = C @ (Z.T @ r) / sigma2
            m_list.append(m)
            C_list.append(C)

        # M-step
        D_new = np.zeros(q)
        for m, C in zip(m_list, C_list):
            D_new += m ** 2 + np.diag(C)
        D_new /= len(groups_data)
        if not spec.random_intercept:
            D_new[0] = 0.0

        sse = 0.0
        for (X, Z, y), m, C in zip(groups_data, m_list, C_list):
            adj = y - X @ beta - Z @ m
            sse += adj @ adj + np.einsum("ij,jk,ik->", Z, C, Z)
        sigma2_new = max(sse / n_total, 1e-12)

        # GLS update of beta under the new covariance
        sqrtD = np.sqrt(D_new)
        XtVX = np.zeros((design.shape[1], design.shape[1]))
        XtVy = np.zeros(design.shape[1])
        for X, Z, y in groups_data:
            B = Z * sqrtD
            A = np.eye(q) + (B.T @ B) / sigma2_new
            A_inv = np.linalg.inv(A)
            # V^{-1} M = M/s2 - B A^{-1} B^T M / s2^2 for any M
            def vinv(M):
                return M / sigma2_new - B @ (A_inv @ (B.T @ M)) / sigma2_new ** 2
            XtVX += X.T @ vinv(X)
            XtVy += X.T @ vinv(y)
        beta = np.linalg.lstsq(XtVX, XtVy, rcond=None)[0]

        D, sigma2 = D_new, sigma2_new
        ll = marginal_loglik(groups_data, beta, D, sigma2)
        rel = abs(ll - ll_old) / (abs(ll_old) + 1e-12)
        ll_old = ll
        if rel < tol:
            break
    else:
        raise LmmConvergenceError(max_iter, ll_old, rel)

    # final BLUPs
    sqrtD = np.sqrt(D)
    effects = {}
    for g, (X, Z, y) in zip(group_ids, groups_data):
        r = y - X @ beta
        B = Z * sqrtD
        A = np.eye(q) + (B.T @ B) / sigma2
        C = (np.linalg.inv(A) * sqrtD).T * sqrtD
        effects[_gkey(g)] = C @ (Z.T @ r) / sigma2

    return LmmModel(beta[1:], float(beta[0]), D, float(sigma2),
                    tuple(rand_cols), names, effects, float(ll_old), it)


def _degenerate_ols(data: Dataset, spec: LmmSpec) -> LmmModel:
    design = np.column_stack([np.ones(len(data.y)), data.X])
    beta, _, _, _ = np.linalg.lstsq(design, data.y, rcond=None)
    resid = data.y - design @ beta
    sigma2 = float(resid @ resid) / len(data.y)
    n = len(data.y)
    ll = -0.5 * (n * math.log(2 * math.pi) + n * math.log(max(sigma2, 1e-300))
                 + float(resid @ resid) / max(sigma2, 1e-300))
    return LmmModel(beta[1:], float(beta[0]), np.zeros(0), sigma2,
                    (), data.column_names, {}, ll, 0)
