"""Linear model family: logistic regression, ridge, lasso, least squares."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from ..errors import ModelError
from .base import (
    FittedModel,
    as_classes,
    as_values,
    check_classification_target,
    check_regression_target,
    encode_labels,
    normalize_rows,
)

_GRAD_TOL = 1e-6
_MAX_ITER = 1000


def logistic_loss_grad(wb: np.ndarray, X, y_pm: np.ndarray, inv_c: float):
    """Objective and gradient of L2-regularized logistic regression.

    ``wb`` packs the weight vector and the (unpenalized) intercept last;
    ``y_pm`` holds +-1 labels.  The objective is
    sum(log(1 + exp(-y * (Xw + b)))) + inv_c/2 * ||w||^2.
    """
    w, b = wb[:-1], wb[-1]
    z = np.asarray(X @ w).ravel() + b
    m = -y_pm * z
    # log(1 + exp(m)) computed stably
    loss = np.sum(np.where(m > 0, m + np.log1p(np.exp(-m)), np.log1p(np.exp(m))))
    loss += 0.5 * inv_c * float(w @ w)
    s = -y_pm / (1.0 + np.exp(-m))  # d loss / d z
    grad_w = np.asarray(X.T @ s).ravel() + inv_c * w
    grad_b = float(np.sum(s))
    return loss, np.append(grad_w, grad_b)


def _fit_logistic_binary(X, y_pm: np.ndarray, c: float) -> tuple[np.ndarray, float]:
    d = X.shape[1]
    inv_c = 1.0 / c
    result = minimize(
        logistic_loss_grad,
        np.zeros(d + 1),
        args=(X, y_pm, inv_c),
        method="L-BFGS-B",
        jac=True,
        options={"maxiter": _MAX_ITER, "gtol": _GRAD_TOL, "ftol": 1e-14, "maxfun": 10 * _MAX_ITER},
    )
    wb = result.x
    return wb[:-1], float(wb[-1])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -30, 30)))


class LogisticRegression(FittedModel):
    """L2-regularized maximum likelihood, one-vs-rest for multiclass.

    Training stops when the loss gradient infinity-norm reaches 1e-6 or
    after 1000 iterations.
    """

    kind = "logreg"
    is_classifier = True

    def __init__(self):
        super().__init__()
        self.weights: np.ndarray | None = None  # (n_problems, d)
        self.intercepts: np.ndarray | None = None

    def fit(self, X, y, params: dict, seed: int = 0) -> "LogisticRegression":
        X = as_values(X)
        self.classes_, y_idx = encode_labels(y)
        check_classification_target(self.classes_, y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        c = float(params.get("C", 1.0))
        if len(self.classes_) == 2:
            problems = [np.where(y_idx == 1, 1.0, -1.0)]
        else:
            problems = [np.where(y_idx == k, 1.0, -1.0) for k in range(len(self.classes_))]
        ws, bs = [], []
        for y_pm in problems:
            w, b = _fit_logistic_binary(X, y_pm, c)
            ws.append(w)
            bs.append(b)
        self.weights = np.vstack(ws)
        self.intercepts = np.asarray(bs)
        return self

    def decision_values(self, X) -> np.ndarray:
        X = as_values(X)
        self._check_width(X)
        return np.asarray(X @ self.weights.T) + self.intercepts

    def predict_score(self, X) -> np.ndarray:
        z = self.decision_values(X)
        if len(self.classes_) == 2:
            p1 = _sigmoid(z[:, 0])
            return np.column_stack([1.0 - p1, p1])
        return normalize_rows(_sigmoid(z))

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_score(X), axis=1)]

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "classes": self.classes_,
            "weights": self.weights,
            "intercepts": self.intercepts,
        }

    @classmethod
    def from_state(cls, state: dict) -> "LogisticRegression":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.classes_ = as_classes(state["classes"])
        model.weights = state["weights"]
        model.intercepts = state["intercepts"]
        return model


def _ridge_solve(X, y_targets: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form ridge on the column-centered system.

    Solves (Xc^T Xc + alpha I) beta = Xc^T yc with Xc, yc centered, then
    recovers the intercept; centering is done via the rank-1 Gram correction
    so sparse inputs never densify.  Returns (coef (d, m), intercept (m,)).
    """
    n, d = X.shape
    if sp.issparse(X):
        if d > 8192:
            raise ModelError(f"ridge normal equations too wide ({d} columns)")
        x_mean = np.asarray(X.mean(axis=0)).ravel()
        gram = np.asarray((X.T @ X).todense())
        xty = np.asarray(X.T @ y_targets)
    else:
        x_mean = X.mean(axis=0)
        gram = X.T @ X
        xty = X.T @ y_targets
    y_mean = y_targets.mean(axis=0)
    gram = gram - n * np.outer(x_mean, x_mean) + alpha * np.eye(d)
    rhs = xty - n * np.outer(x_mean, y_mean)
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise ModelError(
            f"singular ridge system (alpha={alpha} on rank-deficient input)"
        ) from exc
    intercept = y_mean - x_mean @ coef
    return coef, intercept


class RidgeRegression(FittedModel):
    """Closed-form L2-penalized least squares (centered, unpenalized intercept)."""

    kind = "ridge_reg"

    def __init__(self):
        super().__init__()
        self.coef: np.ndarray | None = None
        self.intercept: float = 0.0

    def fit(self, X, y, params: dict, seed: int = 0) -> "RidgeRegression":
        X = as_values(X)
        y = check_regression_target(y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        alpha = float(params.get("alpha", 1.0))
        coef, intercept = _ridge_solve(X, y.reshape(-1, 1), alpha)
        self.coef = coef.ravel()
        self.intercept = float(intercept[0])
        return self

    def predict(self, X) -> np.ndarray:
        X = as_values(X)
        self._check_width(X)
        return np.asarray(X @ self.coef).ravel() + self.intercept

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "coef": self.coef,
            "intercept": self.intercept,
        }

    @classmethod
    def from_state(cls, state: dict) -> "RidgeRegression":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.coef = state["coef"]
        model.intercept = float(state["intercept"])
        return model


class RidgeClassifier(FittedModel):
    """Ridge regression on +-1 targets, one-vs-rest for multiclass.

    Decision values are mapped to probabilities by min-max rescaling against
    the training decision range (monotone, so rank metrics are unaffected).
    """

    kind = "ridge_cls"
    is_classifier = True

    def __init__(self):
        super().__init__()
        self.coef: np.ndarray | None = None  # (d, n_problems)
        self.intercept: np.ndarray | None = None
        self.score_min: np.ndarray | None = None
        self.score_max: np.ndarray | None = None

    def fit(self, X, y, params: dict, seed: int = 0) -> "RidgeClassifier":
        X = as_values(X)
        self.classes_, y_idx = encode_labels(y)
        check_classification_target(self.classes_, y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        alpha = float(params.get("alpha", 1.0))
        k = len(self.classes_)
        if k == 2:
            targets = np.where(y_idx == 1, 1.0, -1.0).reshape(-1, 1)
        else:
            targets = np.where(y_idx[:, None] == np.arange(k)[None, :], 1.0, -1.0)
        self.coef, self.intercept = _ridge_solve(X, targets, alpha)
        train_scores = self._decision(X)
        self.score_min = train_scores.min(axis=0)
        self.score_max = train_scores.max(axis=0)
        return self

    def _decision(self, X) -> np.ndarray:
        return np.asarray(X @ self.coef) + self.intercept

    def predict_score(self, X) -> np.ndarray:
        X = as_values(X)
        self._check_width(X)
        z = self._decision(X)
        span = np.where(self.score_max > self.score_min, self.score_max - self.score_min, 1.0)
        scaled = np.clip((z - self.score_min) / span, 0.0, 1.0)
        degenerate = self.score_max <= self.score_min
        scaled[:, degenerate] = 0.5
        if len(self.classes_) == 2:
            p1 = scaled[:, 0]
            return np.column_stack([1.0 - p1, p1])
        return normalize_rows(scaled)

    def predict(self, X) -> np.ndarray:
        X_v = as_values(X)
        self._check_width(X_v)
        z = self._decision(X_v)
        if len(self.classes_) == 2:
            return self.classes_[(z[:, 0] > 0).astype(int)]
        return self.classes_[np.argmax(z, axis=1)]

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "classes": self.classes_,
            "coef": self.coef,
            "intercept": self.intercept,
            "score_min": self.score_min,
            "score_max": self.score_max,
        }

    @classmethod
    def from_state(cls, state: dict) -> "RidgeClassifier":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.classes_ = as_classes(state["classes"])
        model.coef = state["coef"]
        model.intercept = state["intercept"]
        model.score_min = state["score_min"]
        model.score_max = state["score_max"]
        return model


def lasso_coordinate_descent(
    X: np.ndarray, y: np.ndarray, alpha: float, tol: float = 1e-6, max_iter: int = 10_000
) -> np.ndarray:
    """Minimize 0.5 ||y - X beta||^2 + alpha ||beta||_1 by coordinate descent.

    Stops when the duality gap falls below tol * max(1, primal objective).
    """
    n, d = X.shape
    beta = np.zeros(d)
    col_sq = (X**2).sum(axis=0)
    residual = y.copy()
    y_norm_sq = float(y @ y)
    for _ in range(max_iter):
        max_delta = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = X[:, j] @ residual + col_sq[j] * old
            new = np.sign(rho) * max(abs(rho) - alpha, 0.0) / col_sq[j]
            if new != old:
                residual += X[:, j] * (old - new)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        # duality gap for the unscaled objective
        primal = 0.5 * float(residual @ residual) + alpha * float(np.abs(beta).sum())
        grad_inf = float(np.max(np.abs(X.T @ residual))) if d else 0.0
        scale = min(1.0, alpha / grad_inf) if grad_inf > alpha else 1.0
        theta = residual * scale
        dual = 0.5 * y_norm_sq - 0.5 * float((y - theta) @ (y - theta))
        gap = primal - dual
        if gap <= tol * max(1.0, primal):
            break
    return beta


class Lasso(FittedModel):
    """L1-penalized least squares on centered data (coordinate descent)."""

    kind = "lasso"

    def __init__(self):
        super().__init__()
        self.coef: np.ndarray | None = None
        self.x_mean: np.ndarray | None = None
        self.y_mean: float = 0.0

    def fit(self, X, y, params: dict, seed: int = 0) -> "Lasso":
        from .base import as_dense

        X = as_dense(X, self.kind)
        y = check_regression_target(y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        alpha = float(params.get("alpha", 1.0))
        self.x_mean = X.mean(axis=0)
        self.y_mean = float(y.mean())
        self.coef = lasso_coordinate_descent(X - self.x_mean, y - self.y_mean, alpha)
        return self

    def predict(self, X) -> np.ndarray:
        from .base import as_dense

        X = as_dense(X, self.kind)
        self._check_width(X)
        return (X - self.x_mean) @ self.coef + self.y_mean

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "coef": self.coef,
            "x_mean": self.x_mean,
            "y_mean": self.y_mean,
        }

    @classmethod
    def from_state(cls, state: dict) -> "Lasso":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.coef = state["coef"]
        model.x_mean = state["x_mean"]
        model.y_mean = float(state["y_mean"])
        return model


class LinearRegression(FittedModel):
    """Ordinary least squares with an intercept (minimum-norm solution)."""

    kind = "linreg"

    def __init__(self):
        super().__init__()
        self.coef: np.ndarray | None = None  # d + 1, bias last

    def fit(self, X, y, params: dict, seed: int = 0) -> "LinearRegression":
        from .base import as_dense

        X = as_dense(X, self.kind)
        y = check_regression_target(y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        A = np.hstack([X, np.ones((X.shape[0], 1))])
        self.coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        return self

    def predict(self, X) -> np.ndarray:
        from .base import as_dense

        X = as_dense(X, self.kind)
        self._check_width(X)
        return X @ self.coef[:-1] + self.coef[-1]

    def state_dict(self) -> dict:
        return {"params": self.params, "n_features_in": self.n_features_in_, "coef": self.coef}

    @classmethod
    def from_state(cls, state: dict) -> "LinearRegression":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.coef = state["coef"]
        return model
