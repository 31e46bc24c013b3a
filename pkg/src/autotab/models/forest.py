"""Random forests and gradient-boosted trees on the shared CART engine."""

from __future__ import annotations

import numpy as np

from ..errors import ModelError
from ._tree import BinMapper, Tree, grow_tree
from .base import (
    FittedModel,
    as_classes,
    as_dense,
    check_classification_target,
    check_regression_target,
    encode_labels,
)

_SIGMOID_CLIP = 30.0


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -_SIGMOID_CLIP, _SIGMOID_CLIP)))


def resolve_max_features(spec, d: int) -> int:
    """Map the symbolic subset-size names onto a concrete feature count."""
    if spec is None:
        return d
    if isinstance(spec, str):
        if spec == "sqrt":
            return max(1, int(np.sqrt(d)))
        if spec == "log2":
            return max(1, int(np.log2(d))) if d > 1 else 1
        if spec == "half":
            return max(1, d // 2)
        raise ModelError(f"unknown max_features spec {spec!r}")
    return max(1, min(int(spec), d))


def _tree_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


class _ForestBase(FittedModel):
    def __init__(self):
        super().__init__()
        self.binner: BinMapper | None = None
        self.trees: list[Tree] = []
        self.feature_importances: np.ndarray | None = None

    def _fit_forest(self, X, y_encoded, *, classification, n_classes, params, seed):
        n, d = X.shape
        self.n_features_in_ = d
        self.binner = BinMapper.fit(X)
        codes = self.binner.transform(X)
        n_bins = self.binner.n_bins
        n_estimators = int(params.get("n_estimators", 100))
        min_split = int(params.get("min_samples_split", 2))
        max_features = resolve_max_features(params.get("max_features", "sqrt"), d)
        importances = np.zeros(d)
        self.trees = []
        for t in range(n_estimators):
            rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
            boot = rng.integers(0, n, size=n)
            tree = grow_tree(
                codes,
                y_encoded,
                boot,
                n_bins,
                classification=classification,
                n_classes=n_classes,
                min_samples_split=min_split,
                max_features=max_features,
                seed=_tree_seed(seed, t) | 1,
                importances=importances,
            )
            self.trees.append(tree)
        total = importances.sum()
        self.feature_importances = importances / total if total > 0 else importances

    def _codes(self, X) -> np.ndarray:
        X = as_dense(X, self.kind)
        self._check_width(X)
        return self.binner.transform(X)

    def _base_state(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "binner": self.binner.state_dict(),
            "trees": [t.state_dict() for t in self.trees],
            "importances": self.feature_importances,
        }

    def _load_base(self, state: dict):
        self.params = state["params"]
        self.n_features_in_ = int(state["n_features_in"])
        self.binner = BinMapper.from_state(state["binner"])
        self.trees = [Tree.from_state(t) for t in state["trees"]]
        self.feature_importances = state["importances"]


class RandomForestClassifier(_ForestBase):
    """Bootstrap ensemble of Gini CART trees; probability = vote fraction."""

    kind = "rf_cls"
    is_classifier = True

    def fit(self, X, y, params: dict, seed: int = 0) -> "RandomForestClassifier":
        X = as_dense(X, self.kind)
        self.classes_, y_idx = encode_labels(y)
        check_classification_target(self.classes_, y)
        self.params = dict(params)
        self._fit_forest(
            X, y_idx, classification=True, n_classes=len(self.classes_), params=params, seed=seed
        )
        return self

    def _votes(self, X) -> np.ndarray:
        codes = self._codes(X)
        votes = np.zeros((codes.shape[0], len(self.classes_)))
        rows = np.arange(codes.shape[0])
        for tree in self.trees:
            votes[rows, tree.predict(codes).astype(np.int64)] += 1.0
        return votes

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self._votes(X), axis=1)]

    def predict_score(self, X) -> np.ndarray:
        return self._votes(X) / len(self.trees)

    def state_dict(self) -> dict:
        return {**self._base_state(), "classes": self.classes_}

    @classmethod
    def from_state(cls, state: dict) -> "RandomForestClassifier":
        model = cls()
        model._load_base(state)
        model.classes_ = as_classes(state["classes"])
        return model


class RandomForestRegressor(_ForestBase):
    """Bootstrap ensemble of variance-reduction CART trees; mean prediction."""

    kind = "rf_reg"

    def fit(self, X, y, params: dict, seed: int = 0) -> "RandomForestRegressor":
        X = as_dense(X, self.kind)
        y = check_regression_target(y)
        self.params = dict(params)
        self._fit_forest(X, y, classification=False, n_classes=0, params=params, seed=seed)
        return self

    def predict(self, X) -> np.ndarray:
        codes = self._codes(X)
        total = np.zeros(codes.shape[0])
        for tree in self.trees:
            total += tree.predict(codes)
        return total / len(self.trees)

    def state_dict(self) -> dict:
        return self._base_state()

    @classmethod
    def from_state(cls, state: dict) -> "RandomForestRegressor":
        model = cls()
        model._load_base(state)
        return model


def _boost_binary(codes, y01, n_bins, params, seed):
    """One-vs-rest boosting stage sequence for a single binary problem.

    Trees are grown on the log-loss gradient; leaf values are Newton steps
    (sum of residuals over sum of hessians) scaled by the learning rate.
    """
    n_estimators = int(params.get("n_estimators", 100))
    lr = float(params.get("learning_rate", 0.1))
    max_depth = int(params.get("max_depth", 3))
    p_prior = np.clip(y01.mean(), 1e-12, 1 - 1e-12)
    f0 = float(np.log(p_prior / (1.0 - p_prior)))
    raw = np.full(len(y01), f0)
    pos = np.arange(len(y01), dtype=np.int64)
    trees = []
    for t in range(n_estimators):
        p = _sigmoid(raw)
        grad = y01 - p
        hess = p * (1.0 - p)
        tree = grow_tree(
            codes,
            grad,
            pos,
            n_bins,
            classification=False,
            min_samples_split=2,
            max_depth=max_depth,
            max_features=None,
            seed=_tree_seed(seed, t) | 1,
        )
        leaves = tree.apply(codes)
        num = np.bincount(leaves, weights=grad, minlength=tree.value.shape[0])
        den = np.bincount(leaves, weights=hess, minlength=tree.value.shape[0])
        tree.value = lr * num / np.maximum(den, 1e-12)
        raw += tree.value[leaves]
        trees.append(tree)
    return f0, trees


class GradientBoostingClassifier(FittedModel):
    """Log-loss gradient boosting; multiclass handled one-vs-rest."""

    kind = "gbm_cls"
    is_classifier = True

    def __init__(self):
        super().__init__()
        self.binner: BinMapper | None = None
        self.base_scores: list[float] = []
        self.stages: list[list[Tree]] = []

    def fit(self, X, y, params: dict, seed: int = 0) -> "GradientBoostingClassifier":
        X = as_dense(X, self.kind)
        self.classes_, y_idx = encode_labels(y)
        check_classification_target(self.classes_, y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        self.binner = BinMapper.fit(X)
        codes = self.binner.transform(X)
        n_bins = self.binner.n_bins
        self.base_scores = []
        self.stages = []
        if len(self.classes_) == 2:
            problems = [(y_idx == 1).astype(float)]
        else:
            problems = [(y_idx == c).astype(float) for c in range(len(self.classes_))]
        for ci, y01 in enumerate(problems):
            f0, trees = _boost_binary(codes, y01, n_bins, params, seed + ci)
            self.base_scores.append(f0)
            self.stages.append(trees)
        return self

    def _raw(self, X) -> np.ndarray:
        X = as_dense(X, self.kind)
        self._check_width(X)
        codes = self.binner.transform(X)
        raw = np.empty((codes.shape[0], len(self.stages)))
        for ci, trees in enumerate(self.stages):
            acc = np.full(codes.shape[0], self.base_scores[ci])
            for tree in trees:
                acc += tree.predict(codes)
            raw[:, ci] = acc
        return raw

    def predict_score(self, X) -> np.ndarray:
        raw = self._raw(X)
        if len(self.classes_) == 2:
            p1 = _sigmoid(raw[:, 0])
            return np.column_stack([1.0 - p1, p1])
        from .base import normalize_rows

        return normalize_rows(_sigmoid(raw))

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_score(X), axis=1)]

    def staged_train_loss(self, X, y) -> np.ndarray:
        """Per-stage training log-loss (binary only); used to assert descent."""
        X = as_dense(X, self.kind)
        codes = self.binner.transform(X)
        y01 = (np.asarray(y) == self.classes_[1]).astype(float)
        raw = np.full(codes.shape[0], self.base_scores[0])
        losses = []
        for tree in self.stages[0]:
            raw += tree.predict(codes)
            p = np.clip(_sigmoid(raw), 1e-12, 1 - 1e-12)
            losses.append(float(-np.mean(y01 * np.log(p) + (1 - y01) * np.log(1 - p))))
        return np.asarray(losses)

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "binner": self.binner.state_dict(),
            "classes": self.classes_,
            "base_scores": list(self.base_scores),
            "stages": [[t.state_dict() for t in trees] for trees in self.stages],
        }

    @classmethod
    def from_state(cls, state: dict) -> "GradientBoostingClassifier":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.binner = BinMapper.from_state(state["binner"])
        model.classes_ = as_classes(state["classes"])
        model.base_scores = [float(v) for v in state["base_scores"]]
        model.stages = [[Tree.from_state(t) for t in trees] for trees in state["stages"]]
        return model


class GradientBoostingRegressor(FittedModel):
    """Squared-loss boosting: each stage fits the current residuals."""

    kind = "gbm_reg"

    def __init__(self):
        super().__init__()
        self.binner: BinMapper | None = None
        self.base_score = 0.0
        self.trees: list[Tree] = []

    def fit(self, X, y, params: dict, seed: int = 0) -> "GradientBoostingRegressor":
        X = as_dense(X, self.kind)
        y = check_regression_target(y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        self.binner = BinMapper.fit(X)
        codes = self.binner.transform(X)
        n_bins = self.binner.n_bins
        n_estimators = int(params.get("n_estimators", 100))
        lr = float(params.get("learning_rate", 0.1))
        max_depth = int(params.get("max_depth", 3))
        self.base_score = float(y.mean())
        raw = np.full(len(y), self.base_score)
        pos = np.arange(len(y), dtype=np.int64)
        self.trees = []
        for t in range(n_estimators):
            residual = y - raw
            tree = grow_tree(
                codes,
                residual,
                pos,
                n_bins,
                classification=False,
                min_samples_split=2,
                max_depth=max_depth,
                max_features=None,
                seed=_tree_seed(seed, t) | 1,
            )
            tree.value = tree.value * lr
            raw += tree.predict(codes)
            self.trees.append(tree)
        return self

    def predict(self, X) -> np.ndarray:
        X = as_dense(X, self.kind)
        self._check_width(X)
        codes = self.binner.transform(X)
        out = np.full(codes.shape[0], self.base_score)
        for tree in self.trees:
            out += tree.predict(codes)
        return out

    def staged_train_loss(self, X, y) -> np.ndarray:
        X = as_dense(X, self.kind)
        codes = self.binner.transform(X)
        y = np.asarray(y, dtype=float)
        raw = np.full(codes.shape[0], self.base_score)
        losses = []
        for tree in self.trees:
            raw += tree.predict(codes)
            losses.append(float(np.mean((y - raw) ** 2)))
        return np.asarray(losses)

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "binner": self.binner.state_dict(),
            "base_score": self.base_score,
            "trees": [t.state_dict() for t in self.trees],
        }

    @classmethod
    def from_state(cls, state: dict) -> "GradientBoostingRegressor":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.binner = BinMapper.from_state(state["binner"])
        model.base_score = float(state["base_score"])
        model.trees = [Tree.from_state(t) for t in state["trees"]]
        return model
