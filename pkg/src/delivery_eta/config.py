"""Experiment configuration: strict JSON with documented defaults."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from .features import COLUMN_SPECS, FeatureGroup
from .models.base import ModelConfigError, resolve_params

# experiment model name -> (family, fixed hyperparameters)
MODEL_NAMES = {
    "Linear": ("Linear", {}),
    "ElasticNet": ("ElasticNet", {}),
    "Tree": ("Tree", {}),
    "Bagging": ("Bagging", {}),
    "RandomForest": ("RandomForest", {}),
    "GbdtLevelWise": ("Gbdt", {"growth": "LevelWise"}),
    "GbdtLeafWise": ("Gbdt", {"growth": "LeafWise"}),
    "Svr": ("Svr", {}),
}


def _product(**axes):
    out = [{}]
    for key, values in axes.items():
        out = [{**g, key: v} for g in out for v in values]
    return out


DEFAULT_GRIDS = {
    "Linear": [{}],
    "ElasticNet": _product(alpha=[0.01, 0.1, 1.0], l1_ratio=[0.2, 0.5, 0.8]),
    "Tree": _product(max_depth=[4, 6, 8, 10, 12], min_samples_leaf=[1, 5]),
    "Bagging": _product(n_estimators=[10, 50], max_depth=[None, 12]),
    "RandomForest": _product(n_estimators=[100, 300], max_depth=[8, 12, None]),
    "GbdtLevelWise": _product(n_estimators=[100, 300], learning_rate=[0.05, 0.1], max_depth=[4, 6, 8]),
    "GbdtLeafWise": _product(n_estimators=[100, 300], learning_rate=[0.05, 0.1], max_leaves=[15, 31, 63]),
    "Svr": _product(c=[1.0, 10.0], gamma=[0.05, 0.1]),
}


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _int(v, lo=None):
    return isinstance(v, int) and not isinstance(v, bool) and (lo is None or v >= lo)


@dataclass
class ExperimentConfig:
    dataset: str | None = None
    output_dir: str = "runs/latest"
    seed: int = 42
    test_fraction: float = 0.2
    k_folds: int = 5
    select_k: int = 10
    mi_bins: int = 16
    models: list = field(default_factory=lambda: list(MODEL_NAMES))
    grids: dict = field(default_factory=dict)
    feature_set: list | None = None
    ablation_groups: list = field(default_factory=lambda: ["Geospatial", "Traffic", "Weather"])
    max_distance_km: float | None = 100.0
    max_rows: int | None = None
    n_jobs: int = 1

    def grid_for(self, name):
        """Candidate grid for an experiment model name, fixed params merged in."""
        family, fixed = MODEL_NAMES[name]
        grid = self.grids.get(name, DEFAULT_GRIDS[name])
        return family, [{**g, **fixed} for g in grid]

    def to_dict(self):
        return asdict(self)

    def validate(self):
        if self.dataset is not None and not isinstance(self.dataset, str):
            raise ConfigError("dataset", "must be a path string")
        if not isinstance(self.output_dir, str) or not self.output_dir:
            raise ConfigError("output_dir", "must be a non-empty path string")
        if not _int(self.seed, 0):
            raise ConfigError("seed", "must be a non-negative integer")
        if isinstance(self.test_fraction, bool) or not isinstance(self.test_fraction, (int, float)):
            raise ConfigError("test_fraction", "must be a number")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction", "must lie in (0, 1)")
        if not _int(self.k_folds, 2):
            raise ConfigError("k_folds", "must be an integer >= 2")
        if not _int(self.select_k, 1):
            raise ConfigError("select_k", "must be an integer >= 1")
        if not _int(self.mi_bins, 2):
            raise ConfigError("mi_bins", "must be an integer >= 2")
        if not _int(self.n_jobs, 1):
            raise ConfigError("n_jobs", "must be an integer >= 1")
        if self.max_rows is not None and not _int(self.max_rows, 2):
            raise ConfigError("max_rows", "must be null or an integer >= 2")
        if self.max_distance_km is not None and (
            isinstance(self.max_distance_km, bool)
            or not isinstance(self.max_distance_km, (int, float))
            or self.max_distance_km <= 0
        ):
            raise ConfigError("max_distance_km", "must be null or a positive number")
        if not isinstance(self.models, list) or not self.models:
            raise ConfigError("models", "must be a non-empty list")
        for m in self.models:
            if m not in MODEL_NAMES:
                raise ConfigError("models", f"unknown model {m!r} (known: {', '.join(MODEL_NAMES)})")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("models", "duplicate model name")
        if not isinstance(self.grids, dict):
            raise ConfigError("grids", "must be an object")
        for name, grid in self.grids.items():
            if name not in MODEL_NAMES:
                raise ConfigError(f"grids.{name}", "unknown model name")
            if not isinstance(grid, list) or not grid or not all(isinstance(g, dict) for g in grid):
                raise ConfigError(f"grids.{name}", "must be a non-empty list of objects")
        for name in MODEL_NAMES:
            family, grid = self.grid_for(name)
            for g in grid:
                try:
                    resolve_params(family, g)
                except ModelConfigError as exc:
                    raise ConfigError(f"grids.{name}", str(exc)) from None
        if self.feature_set is not None:
            if not isinstance(self.feature_set, list) or not self.feature_set:
                raise ConfigError("feature_set", "must be null or a non-empty list")
            for c in self.feature_set:
                if c not in COLUMN_SPECS:
                    raise ConfigError("feature_set", f"unknown column {c!r}")
        if not isinstance(self.ablation_groups, list):
            raise ConfigError("ablation_groups", "must be a list")
        try:
            self.ablation_groups = [FeatureGroup.parse(g).value for g in self.ablation_groups]
        except ValueError as exc:
            raise ConfigError("ablation_groups", str(exc)) from None
        return self


_KEYS = set(ExperimentConfig.__dataclass_fields__)


def config_from_dict(d: dict, base_dir=None) -> ExperimentConfig:
    """Build and validate a config; relative paths resolve against ``base_dir``."""
    if not isinstance(d, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = sorted(set(d) - _KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    cfg = ExperimentConfig(**d)
    if base_dir is not None:
        if cfg.dataset is not None and isinstance(cfg.dataset, str) and not os.path.isabs(cfg.dataset):
            cfg.dataset = os.path.normpath(os.path.join(base_dir, cfg.dataset))
        if isinstance(cfg.output_dir, str) and cfg.output_dir and not os.path.isabs(cfg.output_dir):
            cfg.output_dir = os.path.normpath(os.path.join(base_dir, cfg.output_dir))
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    """Read a JSON config file. An empty file yields all defaults."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        d = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return config_from_dict(d, os.path.dirname(os.path.abspath(path)))
