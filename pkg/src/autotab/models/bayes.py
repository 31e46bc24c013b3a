"""Gaussian naive Bayes."""

from __future__ import annotations

import numpy as np

from .base import FittedModel, as_classes, as_dense, check_classification_target, encode_labels

_VAR_FLOOR = 1e-9


class NaiveBayes(FittedModel):
    """Per-feature Gaussian likelihoods with a variance floor of 1e-9."""

    kind = "nb"
    is_classifier = True

    def __init__(self):
        super().__init__()
        self.log_priors: np.ndarray | None = None
        self.means: np.ndarray | None = None  # (k, d)
        self.variances: np.ndarray | None = None

    def fit(self, X, y, params: dict, seed: int = 0) -> "NaiveBayes":
        X = as_dense(X, self.kind)
        self.classes_, y_idx = encode_labels(y)
        check_classification_target(self.classes_, y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        k = len(self.classes_)
        d = X.shape[1]
        self.means = np.empty((k, d))
        self.variances = np.empty((k, d))
        counts = np.empty(k)
        for ci in range(k):
            block = X[y_idx == ci]
            counts[ci] = len(block)
            self.means[ci] = block.mean(axis=0)
            self.variances[ci] = np.maximum(block.var(axis=0), _VAR_FLOOR)
        self.log_priors = np.log(counts / counts.sum())
        return self

    def _joint_log_likelihood(self, X) -> np.ndarray:
        X = as_dense(X, self.kind)
        self._check_width(X)
        n = X.shape[0]
        out = np.empty((n, len(self.classes_)))
        for ci in range(len(self.classes_)):
            diff = X - self.means[ci]
            out[:, ci] = self.log_priors[ci] - 0.5 * np.sum(
                np.log(2.0 * np.pi * self.variances[ci]) + diff**2 / self.variances[ci],
                axis=1,
            )
        return out

    def predict_score(self, X) -> np.ndarray:
        jll = self._joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        probs = np.exp(jll)
        return probs / probs.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self._joint_log_likelihood(X), axis=1)]

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "classes": self.classes_,
            "log_priors": self.log_priors,
            "means": self.means,
            "variances": self.variances,
        }

    @classmethod
    def from_state(cls, state: dict) -> "NaiveBayes":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.classes_ = as_classes(state["classes"])
        model.log_priors = state["log_priors"]
        model.means = state["means"]
        model.variances = state["variances"]
        return model
