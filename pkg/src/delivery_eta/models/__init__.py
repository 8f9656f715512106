"""Regressor families behind one fit/predict contract."""
from .base import (
    FAMILIES,
    ColumnMismatchError,
    ModelConfig,
    ModelConfigError,
    TrainedModel,
    load_model,
    resolve_params,
    save_model,
)
from .linear import LinearPredictor, SingularDesignError, fit_elastic_net, fit_linear
from .svr import SvrPredictor, fit_svr
from .trees import Tree, TreeEnsemble, fit_bagging, fit_gbdt, fit_random_forest, fit_tree

PREDICTORS = {cls.kind: cls for cls in (LinearPredictor, TreeEnsemble, SvrPredictor)}

_FITTERS = {
    "Linear": fit_linear,
    "ElasticNet": fit_elastic_net,
    "Tree": fit_tree,
    "Bagging": fit_bagging,
    "RandomForest": fit_random_forest,
    "Gbdt": fit_gbdt,
    "Svr": fit_svr,
}


def fit_model(config: ModelConfig, fm) -> TrainedModel:
    """Validate ``config`` and fit the selected family on ``fm``."""
    params = config.resolved()
    family = FAMILIES[[f.lower() for f in FAMILIES].index(config.family.lower())]
    return _FITTERS[family](fm, seed=config.seed, **params)


def predict(model: TrainedModel, fm):
    """Predictions for ``fm``; its columns must match training, in order."""
    model.check_columns(fm.column_names)
    return model.predict_array(fm.values)


__all__ = [
    "FAMILIES",
    "ColumnMismatchError",
    "ModelConfig",
    "ModelConfigError",
    "SingularDesignError",
    "TrainedModel",
    "Tree",
    "TreeEnsemble",
    "fit_bagging",
    "fit_elastic_net",
    "fit_gbdt",
    "fit_linear",
    "fit_model",
    "fit_random_forest",
    "fit_svr",
    "fit_tree",
    "load_model",
    "predict",
    "resolve_params",
    "save_model",
]
