"""Feedforward regression network: five ReLU hidden layers, linear output,
squared-error loss, full-batch Adam.

Continuous input columns are standardized and the response is centered on
the training rows inside the fit (both undone at predict time); with a
0.001 learning rate the raw response offset would otherwise dominate the
training budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import ColumnStandardizer, Dataset

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


@dataclass
class MlpParams:
    hidden_sizes: tuple[int, ...] = (1024, 128, 128, 32, 1024)
    learning_rate: float = 0.001
    epochs: int = 500
    rng_seed: int = 0

    def __post_init__(self):
        if len(self.hidden_sizes) != 5:
            raise ValueError("architecture uses exactly five hidden layers")
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden sizes must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def init_layers(sizes: list[int], rng) -> list[tuple[np.ndarray, np.ndarray]]:
    """He-uniform weights (bound sqrt(6/fan_in)), zero biases."""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        layers.append((W, np.zeros(fan_out)))
    return layers


def forward(layers, X):
    """Activations per layer; ReLU on all but the last (linear) layer."""
    acts = [X]
    for i, (W, b) in enumerate(layers):
        z = acts[-1] @ W + b
        acts.append(z if i == len(layers) - 1 else np.maximum(z, 0.0))
    return acts


def loss_and_grads(layers, X, y):
    """Mean squared error and its gradient for every weight and bias."""
    acts = forward(layers, X)
    pred = acts[-1][:, 0]
    n = len(y)
    err = pred - y
    loss = float(err @ err) / n
    delta = (2.0 / n) * err[:, None]
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ W.T) * (acts[i] > 0.0)
    return loss, grads


@dataclass
class MlpModel:
    layers: list
    params: MlpParams
    scaler: ColumnStandardizer
    y_offset: float
    loss_history: list = field(default_factory=list)

    method = "mlp"

    def predict(self, X: np.ndarray) -> np.ndarray:
        Xs = self.scaler.transform(np.asarray(X, dtype=np.float64))
        return forward(self.layers, Xs)[-1][:, 0] + self.y_offset

    def parameter_count(self) -> int:
        return sum(W.size + b.size for W, b in self.layers)

    def to_dict(self) -> dict:
        return {
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.layers],
            "params": {"hidden_sizes": list(self.params.hidden_sizes),
                       "learning_rate": self.params.learning_rate,
                       "epochs": self.params.epochs,
                       "rng_seed": self.params.rng_seed},
            "scaler": self.scaler.to_dict(),
            "y_offset": self.y_offset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        layers = [(np.array(l["W"]), np.array(l["b"])) for l in d["layers"]]
        p = d["params"]
        return cls(layers, MlpParams(tuple(p["hidden_sizes"]), p["learning_rate"],
                                     p["epochs"], p["rng_seed"]),
                   ColumnStandardizer.from_dict(d["scaler"]), d["y_offset"])


def fit_mlp(data: Dataset, params: MlpParams, standardize: bool = True) -> MlpModel:
    X = np.asarray(data.X, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.float64)
    if standardize:
        scaler = ColumnStandardizer(X)
        y_offset = float(y.mean())
    else:
        scaler = ColumnStandardizer(np.zeros((2, X.shape[1])))
        y_offset = 0.0
    Xs = scaler.transform(X)
    yc = y - y_offset

    rng = np.random.default_rng(np.random.SeedSequence([params.rng_seed, 0x3117]))
    sizes = [X.shape[1], *params.hidden_sizes, 1]
    layers = init_layers(sizes, rng)

    m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in layers]
    v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in layers]
    lr = params.learning_rate
    history = []
    for epoch in range(1, params.epochs + 1):
        loss, grads = loss_and_grads(layers, Xs, yc)
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        history.append(loss)
        bc1 = 1.0 - ADAM_BETA1 ** epoch
        bc2 = 1.0 - ADAM_BETA2 ** epoch
        for i, ((W, b), (gW, gb)) in enumerate(zip(layers, grads)):
            mW, mb = m[i]
            vW, vb = v[i]
            mW = ADAM_BETA1 * mW + (1 - ADAM_BETA1) * gW
            mb = ADAM_BETA1 * mb + (1 - ADAM_BETA1) * gb
            vW = ADAM_BETA2 * vW + (1 - ADAM_BETA2) * gW ** 2
            vb = ADAM_BETA2 * vb + (1 - ADAM_BETA2) * gb ** 2
            m[i] = (mW, mb)
            v[i] = (vW, vb)
            W = W - lr * (mW / bc1) / (np.sqrt(vW / bc2) + ADAM_EPS)
            b = b - lr * (mb / bc1) / (np.sqrt(vb / bc2) + ADAM_EPS)
            layers[i] = (W, b)
    return MlpModel(layers, params, scaler, y_offset, history)
