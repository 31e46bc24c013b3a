"""Independent oracles used across the tests.

Everything here is deliberately brute-force or definitional so it shares no
code path with the implementations it checks.
"""

import numpy as np

from autotab.data import ColumnType, Dataset


def brute_force_auc(y_true, scores) -> float:
    """Pairwise positive-vs-negative comparison; ties count one half."""
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=float)
    labels = np.unique(y_true)
    pos = scores[y_true == labels[1]]
    neg = scores[y_true == labels[0]]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def brute_force_accuracy(y_true, y_pred) -> float:
    return sum(1 for a, b in zip(y_true, y_pred) if a == b) / len(y_true)


def brute_force_weighted_f1(y_true, y_pred) -> float:
    y_true = list(y_true)
    y_pred = list(y_pred)
    total = 0.0
    for cls in set(y_true):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total += (sum(1 for t in y_true if t == cls) / len(y_true)) * f1
    return total


def brute_force_rmse(y_true, y_pred) -> float:
    diffs = [(a - b) ** 2 for a, b in zip(y_true, y_pred)]
    return (sum(diffs) / len(diffs)) ** 0.5


def finite_difference_gradient(func, x, eps=1e-6):
    """Central differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(len(x)):
        up = x.copy()
        down = x.copy()
        up[i] += eps
        down[i] -= eps
        grad[i] = (func(up) - func(down)) / (2 * eps)
    return grad


def exhaustive_knn_predict(train_X, train_y, X, k):
    """Plain-python nearest-neighbour scan with the documented tie rules."""
    train_X = np.asarray(train_X, dtype=float)
    X = np.asarray(X, dtype=float)
    classes = sorted(set(train_y))
    out = []
    for row in X:
        dists = [(float(np.sum((row - t) ** 2)), i) for i, t in enumerate(train_X)]
        dists.sort()  # distance, then train index
        votes = {}
        for dist, i in dists[:k]:
            votes[train_y[i]] = votes.get(train_y[i], 0) + 1
        best = max(classes, key=lambda c: (votes.get(c, 0), -classes.index(c)))
        out.append(best)
    return np.asarray(out, dtype=object)


def normal_equations_ols(X, y):
    """Least squares on a bias-augmented matrix via the normal equations."""
    A = np.hstack([np.asarray(X, dtype=float), np.ones((len(X), 1))])
    return np.linalg.solve(A.T @ A, A.T @ np.asarray(y, dtype=float))


def numeric_dataset(X, y=None, prefix="f"):
    """Wrap a dense matrix (and optional target) as a Dataset."""
    X = np.asarray(X, dtype=float)
    columns = {f"{prefix}{j}": X[:, j] for j in range(X.shape[1])}
    types = {name: ColumnType.NUMERIC for name in columns}
    return Dataset.from_columns(columns, types, target=y)


def mixed_binary_dataset(n=400, seed=0, missing=False):
    """Numeric + categorical binary-classification fixture."""
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal(n)
    x2 = rng.standard_normal(n)
    cat = rng.choice(["red", "green", "blue"], n).astype(object)
    logit = 1.4 * x1 - 1.2 * (cat == "red") + 0.4 * x2
    y = np.where(rng.random(n) < 1 / (1 + np.exp(-logit)), "pos", "neg").astype(object)
    if missing:
        x1[rng.random(n) < 0.08] = np.nan
        mask = rng.random(n) < 0.05
        cat[mask] = None
    return Dataset.from_columns(
        {"x1": x1, "x2": x2, "color": cat},
        {"x1": ColumnType.NUMERIC, "x2": ColumnType.NUMERIC, "color": ColumnType.CATEGORICAL},
        target=y,
    )


def numeric_regression_dataset(n=250, seed=3, d=4):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    beta = np.arange(1, d + 1, dtype=float)
    y = X @ beta + 0.05 * rng.standard_normal(n)
    return numeric_dataset(X, y)


def text_dataset(n=200, seed=7):
    """Three imbalanced topics, so the auto metric is weighted F1."""
    rng = np.random.default_rng(seed)
    vocab = {
        "space": ["galaxy", "orbit", "rocket", "lunar", "astro", "probe", "comet", "solar"],
        "sport": ["goal", "league", "match", "coach", "trophy", "stadium", "referee", "score"],
        "food": ["recipe", "oven", "garlic", "butter", "simmer", "dough", "spice", "roast"],
    }
    topics = ["space"] * 3 + ["sport"] * 2 + ["food"]  # 3:2:1 imbalance
    all_words = [w for words in vocab.values() for w in words]
    docs, labels = [], []
    for i in range(n):
        topic = topics[i % len(topics)]
        toks = list(rng.choice(vocab[topic], rng.integers(4, 9))) + list(
            rng.choice(all_words, 1)
        )
        docs.append(" ".join(toks))
        labels.append(topic)
    return Dataset.from_columns(
        {"body": np.array(docs, dtype=object)},
        {"body": ColumnType.TEXT},
        target=np.array(labels, dtype=object),
    )
