"""Dimensionality reduction (truncated SVD, PCA) and feature selection."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import svds

from .data import TaskType, infer_task
from .errors import TransformError
from .transforms import FeatureMatrix

# Below this size the exact LAPACK decomposition is cheaper than Lanczos.
_DENSE_CUTOFF = 600


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: largest-magnitude entry positive."""
    out = components.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


@dataclass
class Projection:
    """Fitted low-rank projection: rows of ``components`` are orthonormal."""

    kind: str  # "svd" | "pca"
    components: np.ndarray  # k x d
    k: int
    center: np.ndarray | None = None  # d-vector, PCA only
    singular_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def explained_variance(self) -> np.ndarray:
        return self.singular_values**2

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "components": self.components,
            "k": self.k,
            "center": self.center,
            "singular_values": self.singular_values,
        }

    @classmethod
    def from_state(cls, state: dict) -> "Projection":
        return cls(
            kind=state["kind"],
            components=state["components"],
            k=int(state["k"]),
            center=state["center"],
            singular_values=state["singular_values"],
        )


def _top_singular_subspace(values, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k right singular vectors and singular values, descending."""
    n, d = values.shape
    small = min(n, d)
    if k >= small or small <= _DENSE_CUTOFF:
        dense = values.toarray() if sp.issparse(values) else np.asarray(values, dtype=float)
        _, s, vt = np.linalg.svd(dense, full_matrices=False)
        return s[:k], vt[:k]
    # Lanczos iteration with a seeded start vector for determinism
    v0 = np.random.default_rng(seed).standard_normal(small)
    _, s, vt = svds(values, k=k, v0=v0, solver="arpack")
    order = np.argsort(-s)
    return s[order], vt[order]


def fit_svd(train: FeatureMatrix, k: int, seed: int = 0) -> Projection:
    """Truncated SVD: components span the top-k right singular subspace."""
    n, d = train.rows, train.cols
    if not 1 <= k <= min(n, d):
        raise TransformError(f"svd k={k} out of range [1, {min(n, d)}]")
    s, vt = _top_singular_subspace(train.values, k, seed)
    return Projection(kind="svd", components=_fix_signs(vt), k=k, singular_values=s)


def fit_pca(train: FeatureMatrix, k: int, seed: int = 0) -> Projection:
    """PCA: SVD of the column-centered matrix, with the center stored."""
    if train.is_sparse:
        raise TransformError("pca requires dense input (centering densifies sparse data)")
    n, d = train.rows, train.cols
    if not 1 <= k <= min(n, d):
        raise TransformError(f"pca k={k} out of range [1, {min(n, d)}]")
    center = train.values.mean(axis=0)
    s, vt = _top_singular_subspace(train.values - center, k, seed)
    return Projection(kind="pca", components=_fix_signs(vt), k=k, center=center, singular_values=s)


def project(p: Projection, data: FeatureMatrix) -> FeatureMatrix:
    """Apply a fitted projection: (data - center) @ components.T."""
    d = p.components.shape[1]
    if data.cols != d:
        raise TransformError(f"projection expects {d} columns, got {data.cols}")
    if p.center is not None:
        if data.is_sparse:
            raise TransformError("pca projection requires dense input")
        out = (data.values - p.center) @ p.components.T
    else:
        out = data.values @ p.components.T
        if sp.issparse(out):
            out = np.asarray(out)
    labels = [f"{p.kind}{j}" for j in range(p.k)]
    return FeatureMatrix(np.asarray(out), labels)


@dataclass
class SelectionMask:
    """Per-feature keep/drop decisions with the scores behind them."""

    kept: np.ndarray  # bool, length d
    scores: np.ndarray  # float, length d

    def apply(self, data: FeatureMatrix) -> FeatureMatrix:
        if data.cols != len(self.kept):
            raise TransformError(f"mask expects {len(self.kept)} columns, got {data.cols}")
        return data.select_columns(self.kept)

    def state_dict(self) -> dict:
        return {"kept": self.kept, "scores": self.scores}

    @classmethod
    def from_state(cls, state: dict) -> "SelectionMask":
        return cls(kept=state["kept"].astype(bool), scores=state["scores"])


def _top_k_mask(scores: np.ndarray, keep: int) -> np.ndarray:
    # stable argsort on -scores: ties keep the lower column index
    order = np.argsort(-scores, kind="stable")
    kept = np.zeros(len(scores), dtype=bool)
    kept[order[:keep]] = True
    return kept


def _clamp_keep(keep: int, d: int) -> int:
    if keep < 1:
        raise TransformError(f"keep must be >= 1, got {keep}")
    if keep > d:
        warnings.warn(f"keep={keep} exceeds {d} features; clamping to {d}", stacklevel=3)
        return d
    return keep


def anova_f_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-feature one-way ANOVA F-statistic against class labels."""
    classes, inverse = np.unique(y, return_inverse=True)
    n, d = X.shape
    k = len(classes)
    overall = X.mean(axis=0)
    ssb = np.zeros(d)
    ssw = np.zeros(d)
    for ci in range(k):
        block = X[inverse == ci]
        mean_c = block.mean(axis=0)
        ssb += len(block) * (mean_c - overall) ** 2
        ssw += ((block - mean_c) ** 2).sum(axis=0)
    scores = np.zeros(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (ssb / (k - 1)) / (ssw / (n - k))
    total_var = X.var(axis=0)
    nonzero = total_var > 0
    scores[nonzero] = np.where(ssw[nonzero] > 0, f[nonzero], np.inf)
    return scores


def squared_correlation_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-feature squared Pearson correlation with a real-valued target."""
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    x_var = (xc**2).sum(axis=0)
    y_var = (yc**2).sum()
    cov = xc.T @ yc
    scores = np.zeros(X.shape[1])
    nonzero = (x_var > 0) & (y_var > 0)
    scores[nonzero] = (cov[nonzero] ** 2) / (x_var[nonzero] * y_var)
    return scores


def select_features(
    train: FeatureMatrix, target: np.ndarray, task: TaskType, keep: int
) -> SelectionMask:
    """Univariate selection: ANOVA F for classification, r^2 for regression.

    The top-``keep`` features by score are kept, ties broken by lower column
    index; zero-variance features score 0.  ``keep`` beyond the feature count
    is clamped with a warning.
    """
    keep = _clamp_keep(keep, train.cols)
    X = train.dense()
    y = np.asarray(target)
    if task.is_classification:
        scores = anova_f_scores(X, y)
    else:
        scores = squared_correlation_scores(X, y.astype(float))
    return SelectionMask(kept=_top_k_mask(scores, keep), scores=scores)


def select_by_importance(
    train: FeatureMatrix,
    target: np.ndarray,
    keep: int,
    task: TaskType | None = None,
    seed: int = 0,
) -> SelectionMask:
    """Keep the top features by random-forest total impurity decrease.

    The forest uses the center of the tuning grid (250 estimators,
    min_samples_split 5, log2 feature subsets); the task, when not given, is
    inferred from the target.
    """
    from .models import ModelFamily, fit as fit_model

    keep = _clamp_keep(keep, train.cols)
    if task is None:
        task = infer_task(np.asarray(target))
    family = ModelFamily.RANDOM_FOREST if task.is_classification else ModelFamily.RANDOM_FOREST_REGRESSOR
    params = {"n_estimators": 250, "min_samples_split": 5, "max_features": "log2"}
    model = fit_model(family, params, train, np.asarray(target), seed=seed)
    scores = model.feature_importances
    return SelectionMask(kept=_top_k_mask(scores, keep), scores=scores)
