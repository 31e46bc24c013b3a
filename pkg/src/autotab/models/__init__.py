"""Model zoo behind one uniform interface.

Every family is fitted through :func:`fit`, predicts labels or values through
:func:`predict`, and classifiers emit per-class probability rows (summing to
1) through :func:`predict_score`.  Fits are deterministic given
(X, y, params, seed).
"""

from __future__ import annotations

import enum

import numpy as np

from ..data import TaskType
from ..errors import ModelError
from .base import FittedModel, as_values
from .bayes import NaiveBayes
from .forest import (
    GradientBoostingClassifier,
    GradientBoostingRegressor,
    RandomForestClassifier,
    RandomForestRegressor,
)
from .linear import Lasso, LinearRegression, LogisticRegression, RidgeClassifier, RidgeRegression
from .neighbors import NearestNeighbors
from .svm import SVM, SVR


class ModelFamily(enum.Enum):
    RANDOM_FOREST = "rf"
    GRADIENT_BOOSTING = "gbm"
    LOGISTIC_REGRESSION = "logreg"
    RIDGE_CLASSIFIER = "ridge_cls"
    NAIVE_BAYES = "nb"
    SVM = "svm"
    NEAREST_NEIGHBORS = "knn"
    RIDGE_REGRESSION = "ridge"
    LASSO = "lasso"
    SVR = "svr"
    LINEAR_REGRESSION = "linreg"
    RANDOM_FOREST_REGRESSOR = "rf_reg"
    GRADIENT_BOOSTING_REGRESSOR = "gbm_reg"


_CLASSIFICATION = frozenset({TaskType.BINARY, TaskType.MULTICLASS})
_REGRESSION = frozenset({TaskType.REGRESSION})

#: Task types each family supports.
FAMILY_TASKS: dict[ModelFamily, frozenset] = {
    ModelFamily.RANDOM_FOREST: _CLASSIFICATION,
    ModelFamily.GRADIENT_BOOSTING: _CLASSIFICATION,
    ModelFamily.LOGISTIC_REGRESSION: _CLASSIFICATION,
    ModelFamily.RIDGE_CLASSIFIER: _CLASSIFICATION,
    ModelFamily.NAIVE_BAYES: _CLASSIFICATION,
    ModelFamily.SVM: _CLASSIFICATION,
    ModelFamily.NEAREST_NEIGHBORS: _CLASSIFICATION,
    ModelFamily.RIDGE_REGRESSION: _REGRESSION,
    ModelFamily.LASSO: _REGRESSION,
    ModelFamily.SVR: _REGRESSION,
    ModelFamily.LINEAR_REGRESSION: _REGRESSION,
    ModelFamily.RANDOM_FOREST_REGRESSOR: _REGRESSION,
    ModelFamily.GRADIENT_BOOSTING_REGRESSOR: _REGRESSION,
}

_MODEL_CLASSES: dict[ModelFamily, type[FittedModel]] = {
    ModelFamily.RANDOM_FOREST: RandomForestClassifier,
    ModelFamily.GRADIENT_BOOSTING: GradientBoostingClassifier,
    ModelFamily.LOGISTIC_REGRESSION: LogisticRegression,
    ModelFamily.RIDGE_CLASSIFIER: RidgeClassifier,
    ModelFamily.NAIVE_BAYES: NaiveBayes,
    ModelFamily.SVM: SVM,
    ModelFamily.NEAREST_NEIGHBORS: NearestNeighbors,
    ModelFamily.RIDGE_REGRESSION: RidgeRegression,
    ModelFamily.LASSO: Lasso,
    ModelFamily.SVR: SVR,
    ModelFamily.LINEAR_REGRESSION: LinearRegression,
    ModelFamily.RANDOM_FOREST_REGRESSOR: RandomForestRegressor,
    ModelFamily.GRADIENT_BOOSTING_REGRESSOR: GradientBoostingRegressor,
}

#: kind string -> model class, for artifact loading.
MODEL_REGISTRY: dict[str, type[FittedModel]] = {
    cls.kind: cls for cls in _MODEL_CLASSES.values()
}

_FAMILY_BY_CLASS = {cls: fam for fam, cls in _MODEL_CLASSES.items()}


def is_classifier(family: ModelFamily) -> bool:
    return FAMILY_TASKS[family] is _CLASSIFICATION


def _check_family_task(family: ModelFamily, y: np.ndarray):
    y = np.asarray(y)
    if is_classifier(family):
        return  # label checks happen inside the model
    if y.dtype.kind not in "fiu":
        raise ModelError(f"{family.value} is a regression family but the target is not numeric")


def fit(family: ModelFamily, params: dict, X, y, seed: int = 0) -> FittedModel:
    """Fit one model family on a feature matrix and target vector."""
    _check_family_task(family, np.asarray(y))
    model = _MODEL_CLASSES[family]()
    model.fit(X, np.asarray(y), dict(params), seed=seed)
    model.family = family
    return model


def predict(model: FittedModel, X) -> np.ndarray:
    """Labels (classification) or real values (regression); deterministic."""
    return model.predict(X)


def predict_score(model: FittedModel, X) -> np.ndarray:
    """Per-class probability matrix with rows summing to 1."""
    return model.predict_score(X)


def load_model(kind: str, state: dict) -> FittedModel:
    try:
        cls = MODEL_REGISTRY[kind]
    except KeyError:
        raise ModelError(f"unknown model kind {kind!r} in artifact") from None
    model = cls.from_state(state)
    model.family = _FAMILY_BY_CLASS.get(cls)
    return model


__all__ = [
    "ModelFamily",
    "FAMILY_TASKS",
    "MODEL_REGISTRY",
    "FittedModel",
    "fit",
    "predict",
    "predict_score",
    "is_classifier",
    "load_model",
    "as_values",
    "RandomForestClassifier",
    "RandomForestRegressor",
    "GradientBoostingClassifier",
    "GradientBoostingRegressor",
    "LogisticRegression",
    "RidgeClassifier",
    "RidgeRegression",
    "Lasso",
    "LinearRegression",
    "NaiveBayes",
    "SVM",
    "SVR",
    "NearestNeighbors",
]
