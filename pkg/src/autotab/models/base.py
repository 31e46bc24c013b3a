"""Shared model plumbing: label encoding, input coercion, width checks."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import ModelError

# Trees, kNN and naive Bayes need dense input; refuse absurd densification.
DENSIFY_LIMIT = 8192


def as_values(X):
    """Unwrap a FeatureMatrix (or pass arrays through)."""
    values = getattr(X, "values", X)
    if sp.issparse(values):
        return values.tocsr()
    return np.asarray(values, dtype=float)


def as_dense(X, context: str) -> np.ndarray:
    values = as_values(X)
    if sp.issparse(values):
        if values.shape[1] > DENSIFY_LIMIT:
            raise ModelError(
                f"{context} needs dense features but input has {values.shape[1]} sparse "
                f"columns; reduce dimensionality first"
            )
        return values.toarray()
    return values


def encode_labels(y) -> tuple[np.ndarray, np.ndarray]:
    """Return (sorted distinct classes, per-row class indices)."""
    y = np.asarray(y)
    classes, inverse = np.unique(y, return_inverse=True)
    return classes, inverse.astype(np.int64)


def as_classes(value) -> np.ndarray:
    """Restore a serialized class list (labels may be strings or numbers)."""
    if isinstance(value, np.ndarray):
        return value
    return np.asarray(value, dtype=object)


class FittedModel:
    """Uniform surface over every model family.

    Immutable after fit.  Classifiers expose ``predict_score`` returning a
    per-class probability matrix whose rows sum to 1; regressors raise.
    """

    kind: str = ""
    is_classifier: bool = False

    def __init__(self):
        self.family = None
        self.params: dict = {}
        self.n_features_in_: int = 0
        self.classes_: np.ndarray | None = None

    def _check_width(self, X):
        width = X.shape[1]
        if width != self.n_features_in_:
            raise ModelError(
                f"model was fitted on {self.n_features_in_} features, got {width}"
            )

    def predict(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict_score(self, X) -> np.ndarray:
        if not self.is_classifier:
            raise ModelError(f"{self.kind} is a regressor; scores are undefined")
        raise NotImplementedError

    def state_dict(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_state(cls, state: dict) -> "FittedModel":
        raise NotImplementedError


def normalize_rows(scores: np.ndarray) -> np.ndarray:
    """Rescale score rows to sum to 1; all-zero rows become uniform."""
    scores = np.asarray(scores, dtype=float)
    totals = scores.sum(axis=1, keepdims=True)
    uniform = np.full_like(scores, 1.0 / scores.shape[1])
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(totals > 0, scores / np.where(totals > 0, totals, 1.0), uniform)
    return out


def check_classification_target(classes: np.ndarray, y):
    from ..data import TaskType, infer_task
    from ..errors import DegenerateTargetError

    if len(classes) < 2:
        raise DegenerateTargetError(
            f"classification needs at least 2 distinct labels, got {len(classes)}"
        )
    if np.asarray(y).dtype.kind in "fiu" and infer_task(np.asarray(y)) is TaskType.REGRESSION:
        raise ModelError("target looks continuous; use a regression family")


def check_regression_target(y):
    y = np.asarray(y)
    if y.dtype.kind not in "fiu":
        raise ModelError("regression needs a numeric target")
    return y.astype(float)
