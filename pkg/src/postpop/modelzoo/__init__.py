"""Six prediction methods behind one train/predict contract.

fit(method, data, params) trains any of lm/lmm/svr/mlp/rf/xgb;
predict_with_groups routes group labels to the mixed model only. Every
trained model serializes to versioned JSON carrying its method tag,
hyperparameters, learned parameters, and a feature-schema hash.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .base import ColumnStandardizer, Dataset
from .boosting import XgbModel, XgbParams, fit_xgb
from .defaults import paper_params
from .forest import ForestModel, ForestParams, fit_rf
from .linear import OlsModel, RankDeficientError, fit_ols
from .metrics import mae, r_squared, rmse
from .mixed import LmmConvergenceError, LmmModel, LmmSpec, fit_lmm
from .mlp import MlpModel, MlpParams, TrainingDivergedError, fit_mlp
from .svr import SvrModel, SvrParams, fit_svr

METHODS = ("lm", "lmm", "svr", "mlp", "rf", "xgb")

SERIALIZATION_VERSION = 1

_MODEL_CLASSES = {
    "lm": OlsModel, "lmm": LmmModel, "svr": SvrModel,
    "mlp": MlpModel, "rf": ForestModel, "xgb": XgbModel,
}


def fit(method: str, data: Dataset, params=None):
    """Train one method; params is the method's parameter object (an
    LmmSpec for lmm; ignored for lm)."""
    if method == "lm":
        return fit_ols(data)
    if method == "lmm":
        return fit_lmm(data, params)
    if method == "svr":
        return fit_svr(data, params or SvrParams())
    if method == "mlp":
        return fit_mlp(data, params or MlpParams())
    if method == "rf":
        return fit_rf(data, params or ForestParams())
    if method == "xgb":
        return fit_xgb(data, params or XgbParams())
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def predict_with_groups(model, X: np.ndarray, groups=None) -> np.ndarray:
    """Uniform prediction entry point; only the mixed model uses groups."""
    if isinstance(model, LmmModel):
        return model.predict(X, groups)
    return model.predict(X)


def feature_schema_hash(column_names) -> str:
    return hashlib.sha256("\x00".join(column_names).encode()).hexdigest()[:16]


def model_to_json(model, column_names=None) -> dict:
    names = column_names or getattr(model, "column_names", ())
    return {
        "format_version": SERIALIZATION_VERSION,
        "method": model.method,
        "feature_schema_hash": feature_schema_hash(names),
        "column_names": list(names),
        "model": model.to_dict(),
    }


def model_from_json(doc: dict):
    if doc.get("format_version") != SERIALIZATION_VERSION:
        raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
    cls = _MODEL_CLASSES.get(doc.get("method"))
    if cls is None:
        raise ValueError(f"unknown model method {doc.get('method')!r}")
    return cls.from_dict(doc["model"])


def save_model(model, path, column_names=None) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(model, column_names), fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return model_from_json(json.load(fh))
