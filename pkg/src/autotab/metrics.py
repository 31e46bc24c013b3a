"""Evaluation metrics with explicit optimization direction.

``choose_metric`` picks a sensible default from the task type and label
skew: AUC for binary targets, weighted F1 for skewed multiclass, accuracy
for balanced multiclass, RMSE for regression.  A user-supplied metric always
overrides the automatic choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TaskType
from .errors import ConfigError, MetricError

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

# min/max class-support ratio below which multiclass targets count as skewed
_SKEW_RATIO = 0.5


def _check_lengths(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) == 0:
        raise MetricError("metric called on empty input")
    if len(a) != len(b):
        raise MetricError(f"length mismatch: {len(a)} vs {len(b)}")
    return a, b


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc(y_true, scores) -> float:
    """Rank-based (Mann-Whitney) AUC; tied scores contribute one half."""
    y_true, scores = _check_lengths(y_true, scores)
    y_true = np.asarray(y_true)
    labels = np.unique(y_true)
    if len(labels) != 2:
        raise MetricError(f"auc needs both classes present, got {len(labels)}")
    positive = y_true == labels[1]
    n_pos = int(positive.sum())
    n_neg = len(y_true) - n_pos
    ranks = _average_ranks(np.asarray(scores, dtype=float))
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = _check_lengths(y_true, y_pred)
    return float(np.mean(y_true == y_pred))


def weighted_f1(y_true, y_pred) -> float:
    """Support-weighted mean of per-class F1 (F1 = 0 when undefined)."""
    y_true, y_pred = _check_lengths(y_true, y_pred)
    total = 0.0
    n = len(y_true)
    for cls in np.unique(y_true):
        tp = float(np.sum((y_pred == cls) & (y_true == cls)))
        fp = float(np.sum((y_pred == cls) & (y_true != cls)))
        fn = float(np.sum((y_pred != cls) & (y_true == cls)))
        support = tp + fn
        denom = 2 * tp + fp + fn
        f1 = 2 * tp / denom if denom > 0 else 0.0
        total += (support / n) * f1
    return total


def rmse(y_true, y_pred) -> float:
    y_true, y_pred = _check_lengths(y_true, y_pred)
    diff = np.asarray(y_true, dtype=float) - np.asarray(y_pred, dtype=float)
    return float(np.sqrt(np.mean(diff**2)))


def logloss(y_true, probabilities, classes) -> float:
    """Mean negative log probability of the true class (probabilities clipped)."""
    y_true = np.asarray(y_true)
    probabilities = np.asarray(probabilities, dtype=float)
    if len(y_true) == 0:
        raise MetricError("metric called on empty input")
    classes = np.asarray(classes)
    col = np.searchsorted(classes, y_true)
    if not np.all(classes[col] == y_true):
        raise MetricError("labels outside the class list")
    p = np.clip(probabilities[np.arange(len(y_true)), col], 1e-15, 1.0)
    return float(-np.mean(np.log(p)))


@dataclass(frozen=True)
class Metric:
    kind: str  # "auc" | "accuracy" | "weighted_f1" | "rmse" | "logloss"
    direction: str  # MAXIMIZE | MINIMIZE

    def better(self, a: float, b: float) -> bool:
        """Is score ``a`` strictly better than ``b``?"""
        return a > b if self.direction == MAXIMIZE else a < b


AUC = Metric("auc", MAXIMIZE)
ACCURACY = Metric("accuracy", MAXIMIZE)
WEIGHTED_F1 = Metric("weighted_f1", MAXIMIZE)
RMSE = Metric("rmse", MINIMIZE)
LOGLOSS = Metric("logloss", MINIMIZE)

METRICS_BY_NAME = {m.kind: m for m in (AUC, ACCURACY, WEIGHTED_F1, RMSE, LOGLOSS)}


def choose_metric(task: TaskType, target) -> Metric:
    """Automatic metric selection from the task and label distribution."""
    if task is TaskType.BINARY:
        return AUC
    if task is TaskType.MULTICLASS:
        _, counts = np.unique(np.asarray(target), return_counts=True)
        if counts.min() / counts.max() < _SKEW_RATIO:
            return WEIGHTED_F1
        return ACCURACY
    return RMSE


def resolve_metric(name: str, task: TaskType, target) -> Metric:
    """Map a CLI metric name ("auto" included) onto a Metric, validating task fit."""
    if name == "auto":
        return choose_metric(task, target)
    try:
        metric = METRICS_BY_NAME[name]
    except KeyError:
        raise ConfigError(
            f"unknown metric {name!r}; expected one of "
            f"{sorted(METRICS_BY_NAME)} or 'auto'"
        ) from None
    if metric.kind == "rmse" and task is not TaskType.REGRESSION:
        raise ConfigError("rmse is a regression metric but the task is classification")
    if metric.kind in ("auc", "accuracy", "weighted_f1", "logloss") and task is TaskType.REGRESSION:
        raise ConfigError(f"{metric.kind} is a classification metric but the task is regression")
    if metric.kind == "auc" and task is TaskType.MULTICLASS:
        raise ConfigError("auc supports binary targets only")
    return metric


def evaluate_metric(
    metric: Metric,
    y_true,
    *,
    y_pred=None,
    scores=None,
    classes=None,
) -> float:
    """Apply a metric to the right prediction kind.

    AUC consumes the positive-class score column, logloss the full
    probability matrix, the label metrics the predicted labels, and RMSE the
    predicted values.
    """
    if metric.kind == "auc":
        if scores is None or classes is None:
            raise MetricError("auc needs scores and the class list")
        return auc(np.asarray(y_true) == np.asarray(classes)[1], np.asarray(scores)[:, 1])
    if metric.kind == "logloss":
        if scores is None or classes is None:
            raise MetricError("logloss needs scores and the class list")
        return logloss(y_true, scores, classes)
    if metric.kind == "accuracy":
        return accuracy(y_true, y_pred)
    if metric.kind == "weighted_f1":
        return weighted_f1(y_true, y_pred)
    if metric.kind == "rmse":
        return rmse(y_true, y_pred)
    raise MetricError(f"unknown metric kind {metric.kind!r}")
