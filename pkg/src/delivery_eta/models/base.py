"""Model configuration, the fitted-model container and its JSON format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

FAMILIES = ("Linear", "ElasticNet", "Tree", "Bagging", "RandomForest", "Gbdt", "Svr")
MODEL_FORMAT = "delivery_eta.model"
MODEL_VERSION = 1


class ModelConfigError(ValueError):
    pass


class ColumnMismatchError(ValueError):
    def __init__(self, missing, extra, order=False):
        if order and not missing and not extra:
            msg = "columns match but are in a different order than at training time"
        else:
            msg = f"column mismatch: missing {missing}, extra {extra}"
        super().__init__(msg)
        self.missing = missing
        self.extra = extra


def _positive_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 1


def _depth(v):
    return v is None or _positive_int(v)


def _nonneg(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0


def _positive(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _unit_open(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and 0 < v <= 1


def _unit_closed(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and 0 <= v <= 1


def _bool(v):
    return isinstance(v, bool)


def _opt_positive_int(v):
    return v is None or _positive_int(v)


def _jobs(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


_TREE = {
    "max_depth": (None, _depth),
    "min_samples_split": (2, lambda v: _positive_int(v) and v >= 2),
    "min_samples_leaf": (1, _positive_int),
}

# family -> {param: (default, validator)}
SCHEMA: dict[str, dict[str, tuple[Any, Any]]] = {
    "Linear": {"min_norm": (False, _bool)},
    "ElasticNet": {
        "alpha": (0.1, _nonneg),
        "l1_ratio": (0.5, _unit_closed),
        "tol": (1e-6, _positive),
        "max_iter": (10_000, _positive_int),
    },
    "Tree": dict(_TREE),
    "Bagging": {
        **_TREE,
        "n_estimators": (10, _positive_int),
        "bootstrap": (True, _bool),
        "n_jobs": (1, _jobs),
    },
    "RandomForest": {
        **_TREE,
        "n_estimators": (100, _positive_int),
        "m_try": (None, _opt_positive_int),
        "bootstrap": (True, _bool),
        "n_jobs": (1, _jobs),
    },
    "Gbdt": {
        "n_estimators": (100, _positive_int),
        "learning_rate": (0.1, _unit_open),
        "growth": ("LevelWise", lambda v: v in ("LevelWise", "LeafWise")),
        "max_depth": (6, _depth),
        "max_leaves": (31, lambda v: _positive_int(v) and v >= 2),
        "lambda_l2": (1.0, _nonneg),
        "alpha_l1": (0.0, _nonneg),
        "min_gain": (0.0, _nonneg),
        "histogram_bins": (255, lambda v: _positive_int(v) and 2 <= v <= 256),
        "min_samples_leaf": (None, _opt_positive_int),
    },
    "Svr": {
        "kernel": ("Rbf", lambda v: v in ("Linear", "Rbf")),
        "c": (1.0, _positive),
        "epsilon": (0.1, _nonneg),
        "gamma": (0.1, _positive),
        "tol": (1e-3, _positive),
        "max_passes": (200, _positive_int),
        "max_train_rows": (8000, _positive_int),
    },
}


def normalize_family(name: str) -> str:
    for fam in FAMILIES:
        if fam.lower() == str(name).strip().lower():
            return fam
    raise ModelConfigError(f"unknown model family {name!r}")


def resolve_params(family: str, params: dict | None) -> dict:
    """Fill defaults and validate; unknown keys are rejected."""
    family = normalize_family(family)
    schema = SCHEMA[family]
    params = dict(params or {})
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise ModelConfigError(f"{family}: unknown hyperparameter {unknown[0]!r}")
    out = {}
    for key, (default, ok) in schema.items():
        v = params.get(key, default)
        if family == "Svr" and key == "kernel" and isinstance(v, str):
            v = {"linear": "Linear", "rbf": "Rbf"}.get(v.lower(), v)
        if family == "Gbdt" and key == "growth" and isinstance(v, str):
            v = {"levelwise": "LevelWise", "leafwise": "LeafWise"}.get(v.lower(), v)
        if not ok(v):
            raise ModelConfigError(f"{family}: invalid value {v!r} for {key!r}")
        out[key] = v
    return out


@dataclass(frozen=True)
class ModelConfig:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 42

    def resolved(self) -> dict:
        return resolve_params(self.family, self.params)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass
class TrainedModel:
    family: str
    params: dict
    columns: list[str]
    predictor: Any
    info: dict = field(default_factory=dict)
    feature_importances: np.ndarray | None = None
    seed: int = 42

    def predict_array(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} columns, got shape {X.shape}")
        if X.shape[0] == 0:
            return np.zeros(0)
        return self.predictor.predict(X)

    def check_columns(self, names):
        names = list(names)
        if names == list(self.columns):
            return
        missing = [c for c in self.columns if c not in names]
        extra = [c for c in names if c not in self.columns]
        raise ColumnMismatchError(missing, extra, order=True)

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "family": self.family,
            "params": _jsonable(self.params),
            "seed": int(self.seed),
            "columns": list(self.columns),
            "info": _jsonable(self.info),
            "feature_importances": None
            if self.feature_importances is None
            else _jsonable(self.feature_importances),
            "predictor": self.predictor.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        from . import PREDICTORS

        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not a model document")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        pred = PREDICTORS[d["predictor"]["kind"]].from_dict(d["predictor"])
        fi = d.get("feature_importances")
        return cls(
            family=d["family"],
            params=d["params"],
            columns=list(d["columns"]),
            predictor=pred,
            info=d.get("info", {}),
            feature_importances=None if fi is None else np.asarray(fi, dtype=np.float64),
            seed=d.get("seed", 42),
        )


def save_model(model: TrainedModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return TrainedModel.from_dict(json.load(fh))
