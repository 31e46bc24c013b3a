"""k-nearest-neighbour classification by exhaustive Euclidean scan."""

from __future__ import annotations

import numpy as np

from .base import FittedModel, as_classes, as_dense, check_classification_target, encode_labels

_CHUNK = 256


class NearestNeighbors(FittedModel):
    """Stores the training set; prediction is the majority of the k nearest.

    Distance ties are broken by the lower training-row index (stable sort),
    vote ties by the lower class index.
    """

    kind = "knn"
    is_classifier = True

    def __init__(self):
        super().__init__()
        self.train_X: np.ndarray | None = None
        self.train_y: np.ndarray | None = None  # class indices
        self.k: int = 5

    def fit(self, X, y, params: dict, seed: int = 0) -> "NearestNeighbors":
        X = as_dense(X, self.kind)
        self.classes_, y_idx = encode_labels(y)
        check_classification_target(self.classes_, y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        self.k = int(params.get("k", 5))
        if self.k < 1:
            from ..errors import ModelError

            raise ModelError(f"k must be >= 1, got {self.k}")
        self.train_X = X.copy()
        self.train_y = y_idx
        return self

    def _top_k(self, d2: np.ndarray, k: int) -> np.ndarray:
        """Row-wise k nearest columns, ties to the lower train index.

        Small training sets use a full stable sort (exact tie semantics);
        large ones preselect k+16 candidates with argpartition first, which
        preserves the tie rule unless more than 16 rows tie exactly at the
        selection boundary.
        """
        n_train = d2.shape[1]
        if n_train <= 2048:
            return np.argsort(d2, axis=1, kind="stable")[:, :k]
        m = min(k + 16, n_train)
        candidates = np.argpartition(d2, m - 1, axis=1)[:, :m]
        rows = np.arange(d2.shape[0])[:, None]
        # lexicographic (distance, index) order within the candidate set
        order = np.lexsort((candidates, d2[rows, candidates]), axis=1)[:, :k]
        return candidates[rows, order]

    def _neighbor_votes(self, X) -> np.ndarray:
        X = as_dense(X, self.kind)
        self._check_width(X)
        k = min(self.k, len(self.train_X))
        train_sq = (self.train_X**2).sum(axis=1)
        votes = np.zeros((X.shape[0], len(self.classes_)))
        for start in range(0, X.shape[0], _CHUNK):
            block = X[start : start + _CHUNK]
            d2 = (
                (block**2).sum(axis=1)[:, None]
                + train_sq[None, :]
                - 2.0 * block @ self.train_X.T
            )
            nearest = self._top_k(d2, k)
            rows = np.repeat(np.arange(block.shape[0]), k)
            labels = self.train_y[nearest.ravel()]
            np.add.at(votes, (start + rows, labels), 1.0)
        return votes

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self._neighbor_votes(X), axis=1)]

    def predict_score(self, X) -> np.ndarray:
        k = min(self.k, len(self.train_X))
        return self._neighbor_votes(X) / k

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "classes": self.classes_,
            "train_X": self.train_X,
            "train_y": self.train_y,
            "k": self.k,
        }

    @classmethod
    def from_state(cls, state: dict) -> "NearestNeighbors":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.classes_ = as_classes(state["classes"])
        model.train_X = state["train_X"]
        model.train_y = state["train_y"].astype(np.int64)
        model.k = int(state["k"])
        return model
