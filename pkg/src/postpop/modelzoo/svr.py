"""Epsilon-insensitive support vector regression, RBF kernel, solved in the
dual by SMO-style two-coordinate updates with maximal-violating-pair
working-set selection.

The dual is written over 2n variables a = (alpha, alpha*) with signs
s = (+1, -1): minimize (1/2) a'Qa + p'a subject to s'a = 0 and
0 <= a <= C, where Q[t,u] = s_t s_u K(x_t, x_u) and
p = (eps - y, eps + y). Inputs are standardized (continuous columns only)
on the training rows inside the fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ColumnStandardizer, Dataset

DEFAULT_KKT_TOL = 1e-6
MAX_PAIR_UPDATES = 1_000_000


class SvrConvergenceError(RuntimeError):
    pass


@dataclass
class SvrParams:
    C: float = 1.0
    epsilon: float = 0.1
    gamma: float = 0.1

    def __post_init__(self):
        if self.C <= 0 or self.epsilon <= 0 or self.gamma <= 0:
            raise ValueError("C, epsilon, and gamma must all be positive")


@dataclass
class SvrModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray       # alpha - alpha* on support vectors
    bias: float
    params: SvrParams
    scaler: ColumnStandardizer
    dual_objective: float
    n_iter: int

    method = "svr"

    def predict(self, X: np.ndarray) -> np.ndarray:
        Xs = self.scaler.transform(np.asarray(X, dtype=np.float64))
        K = rbf_kernel(Xs, self.support_vectors, self.params.gamma)
        return K @ self.dual_coef + self.bias

    def to_dict(self) -> dict:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "params": {"C": self.params.C, "epsilon": self.params.epsilon,
                       "gamma": self.params.gamma},
            "scaler": self.scaler.to_dict(),
            "dual_objective": self.dual_objective,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvrModel":
        return cls(np.array(d["support_vectors"]), np.array(d["dual_coef"]),
                   d["bias"], SvrParams(**d["params"]),
                   ColumnStandardizer.from_dict(d["scaler"]),
                   d["dual_objective"], d["n_iter"])


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :]
          - 2.0 * A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def fit_svr(data: Dataset, params: SvrParams, tol: float = DEFAULT_KKT_TOL,
            max_iter: int = MAX_PAIR_UPDATES, standardize: bool = True) -> SvrModel:
    X = np.asarray(data.X, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.float64)
    if standardize:
        scaler = ColumnStandardizer(X)
    else:
        scaler = ColumnStandardizer(np.zeros((2, X.shape[1])))  # identity transform
    Xs = scaler.transform(X)
    n = len(y)
    K = rbf_kernel(Xs, Xs, params.gamma)
    C, eps = params.C, params.epsilon

    s = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([eps - y, eps + y])
    a = np.zeros(2 * n)
    G = p.copy()  # gradient of (1/2)a'Qa + p'a at a = 0
    idx = np.concatenate([np.arange(n), np.arange(n)])

    it = 0
    converged = False
    while it < max_iter:
        it += 1
        # maximal violating pair over -s*G
        up = (s > 0) & (a < C) | (s < 0) & (a > 0)
        low = (s > 0) & (a > 0) | (s < 0) & (a < C)
        viol = -s * G
        i = int(np.argmax(np.where(up, viol, -np.inf)))
        j = int(np.argmin(np.where(low, viol, np.inf)))
        m_up, m_low = viol[i], viol[j]
        if m_up - m_low < tol:
            converged = True
            break

        ki, kj = idx[i], idx[j]
        eta = max(K[ki, ki] + K[kj, kj] - 2.0 * K[ki, kj], 1e-12)
        # step along a_i += s_i * t, a_j -= s_j * t
        t = -(s[i] * G[i] - s[j] * G[j]) / eta
        if s[i] > 0:
            lo_t, hi_t = -a[i], C - a[i]
        else:
            lo_t, hi_t = a[i] - C, a[i]
        if s[j] > 0:
            lo_t, hi_t = max(lo_t, a[j] - C), min(hi_t, a[j])
        else:
            lo_t, hi_t = max(lo_t, -a[j]), min(hi_t, C - a[j])
        t = min(max(t, lo_t), hi_t)
        if t == 0.0:  # numerically pinned at the box; nothing left to move
            converged = True
            break
        da_i, da_j = s[i] * t, -s[j] * t
        a[i] += da_i
        a[j] += da_j
        # G += Q[:, i] da_i + Q[:, j] da_j with Q[:, i] = s * K[idx, idx[i]] * s_i
        G += (s * K[idx, ki]) * (s[i] * da_i) + (s * K[idx, kj]) * (s[j] * da_j)
    if not converged:
        raise SvrConvergenceError(
            f"SMO hit the {max_iter}-pair iteration cap (KKT gap "
            f"{float(m_up - m_low):.3e} > tol {tol:g})")

    # for free dual variables -s*G equals the bias, so the midpoint of the
    # bracketing bounds is the KKT-consistent intercept
    bias = (m_up + m_low) / 2.0
    coef = a[:n] - a[n:]
    sv = np.abs(coef) > 0
    return SvrModel(Xs[sv], coef[sv], float(bias), params, scaler,
                    _dual_objective(a, p, K, n), it)


def _dual_objective(a, p, K, n):
    v = a[:n] - a[n:]  # signed dual coefficients per sample
    return float(0.5 * v @ K @ v + p @ a)
