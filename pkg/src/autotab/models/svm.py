"""RBF-kernel support vector machines trained by sequential minimal optimization.

The solver works on the generic dual
    min 0.5 a^T Q a + p^T a,  s.t.  y^T a = 0,  0 <= a <= C
with maximal-violating-pair working-set selection and a full gradient kept
incrementally.  Classification and epsilon-insensitive regression both reduce
to this form (regression doubles the variable count).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numba import njit

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

#: Kernel solvers are quadratic in row count; larger training sets are
#: subsampled (stratified for classification) before fitting.
SVM_SUBSAMPLE = 5000
SVR_SUBSAMPLE = 2500  # the regression dual has 2n variables

_KKT_TOL = 1e-3
_EPSILON = 0.1  # epsilon-insensitive tube for regression


@njit(cache=True, nogil=True)
def smo_solve(Q, p, y, C, tol, max_iter):
    """Generic SMO loop; returns (alpha, rho, iterations, kkt_gap).

    The bias of the decision function is -rho.
    """
    n = Q.shape[0]
    alpha = np.zeros(n)
    grad = p.copy()
    it = 0
    gap = np.inf
    while it < max_iter:
        # i: most violating in the "up" set, j: most violating in "down"
        g_max = -np.inf
        g_min = np.inf
        i = -1
        j = -1
        for t in range(n):
            yg = -y[t] * grad[t]
            up = (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0)
            down = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)
            if up and yg > g_max:
                g_max = yg
                i = t
            if down and yg < g_min:
                g_min = yg
                j = t
        gap = g_max - g_min
        if gap <= tol or i < 0 or j < 0:
            break

        # analytic update of the (i, j) pair along y_i da_i = -y_j da_j
        quad = Q[i, i] + Q[j, j] - 2.0 * y[i] * y[j] * Q[i, j]
        if quad <= 0.0:
            quad = 1e-12
        delta = gap / quad

        old_ai = alpha[i]
        old_aj = alpha[j]
        ai = old_ai + y[i] * delta
        if ai < 0.0:
            ai = 0.0
        elif ai > C:
            ai = C
        step = y[i] * (ai - old_ai)  # step in y-space
        aj = old_aj - y[j] * step
        if aj < 0.0:
            aj = 0.0
        elif aj > C:
            aj = C
        step = -y[j] * (aj - old_aj)
        ai = old_ai + y[i] * step

        d_i = ai - old_ai
        d_j = aj - old_aj
        if d_i == 0.0 and d_j == 0.0:
            break
        alpha[i] = ai
        alpha[j] = aj
        for t in range(n):
            grad[t] += Q[t, i] * d_i + Q[t, j] * d_j
        it += 1

    rho = -(g_max + g_min) / 2.0
    return alpha, rho, it, gap


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for all row pairs."""
    if sp.issparse(A) or sp.issparse(B):
        A = sp.csr_matrix(A)
        B = sp.csr_matrix(B)
        a_sq = np.asarray(A.multiply(A).sum(axis=1)).ravel()
        b_sq = np.asarray(B.multiply(B).sum(axis=1)).ravel()
        cross = np.asarray((A @ B.T).todense())
    else:
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        a_sq = (A**2).sum(axis=1)
        b_sq = (B**2).sum(axis=1)
        cross = A @ B.T
    d2 = np.maximum(a_sq[:, None] + b_sq[None, :] - 2.0 * cross, 0.0)
    return np.exp(-gamma * d2)


def resolve_gamma(spec, d: int) -> float:
    if spec == "scale":
        return 1.0 / d
    return float(spec)


def _subsample(n: int, cap: int, seed: int, strata: np.ndarray | None) -> np.ndarray:
    if n <= cap:
        return np.arange(n)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B5]))
    if strata is None:
        return np.sort(rng.choice(n, size=cap, replace=False))
    # proportional allocation per class, at least one row each
    classes, inverse = np.unique(strata, return_inverse=True)
    chosen = []
    for ci in range(len(classes)):
        members = np.flatnonzero(inverse == ci)
        take = max(1, int(round(cap * len(members) / n)))
        take = min(take, len(members))
        chosen.append(rng.choice(members, size=take, replace=False))
    idx = np.unique(np.concatenate(chosen))
    return idx


class SVM(FittedModel):
    """Soft-margin RBF classifier; multiclass one-vs-rest.

    Probabilities come from min-max rescaling of the decision values against
    the training range (monotone, so ranking metrics are unchanged).
    """

    kind = "svm"
    is_classifier = True

    def __init__(self):
        super().__init__()
        self.support: np.ndarray | None = None  # rows kept for the kernel
        self.dual_coef: np.ndarray | None = None  # (n_problems, n_support)
        self.biases: np.ndarray | None = None
        self.gamma: float = 1.0
        self.kkt_gaps: list[float] = []
        self.score_min: np.ndarray | None = None
        self.score_max: np.ndarray | None = None

    def fit(self, X, y, params: dict, seed: int = 0) -> "SVM":
        X = as_values(X)
        self.classes_, y_idx = encode_labels(y)
        check_classification_target(self.classes_, y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        C = float(params.get("C", 1.0))
        self.gamma = resolve_gamma(params.get("gamma", "scale"), X.shape[1])

        keep = _subsample(X.shape[0], SVM_SUBSAMPLE, seed, y_idx)
        X_fit = X[keep]
        y_fit = y_idx[keep]
        K = rbf_kernel(X_fit, X_fit, self.gamma)

        k = len(self.classes_)
        problems = [1] if k == 2 else list(range(k))
        coefs = []
        biases = []
        self.kkt_gaps = []
        for target in problems:
            y_pm = np.where(y_fit == target, 1.0, -1.0)
            Q = (y_pm[:, None] * y_pm[None, :]) * K
            p = -np.ones(len(y_pm))
            alpha, rho, _, gap = smo_solve(Q, p, y_pm, C, _KKT_TOL, 200 * len(y_pm))
            coefs.append(alpha * y_pm)
            biases.append(-rho)
            self.kkt_gaps.append(float(gap))
        self.support = X_fit
        self.dual_coef = np.vstack(coefs)
        self.biases = np.asarray(biases)
        train_scores = self._decision(X_fit)
        self.score_min = train_scores.min(axis=0)
        self.score_max = train_scores.max(axis=0)
        return self

    def _decision(self, X) -> np.ndarray:
        K = rbf_kernel(X, self.support, self.gamma)
        return K @ self.dual_coef.T + self.biases

    def decision_values(self, X) -> np.ndarray:
        X = as_values(X)
        self._check_width(X)
        return self._decision(X)

    def predict_score(self, X) -> np.ndarray:
        z = self.decision_values(X)
        span = np.where(self.score_max > self.score_min, self.score_max - self.score_min, 1.0)
        scaled = np.clip((z - self.score_min) / span, 0.0, 1.0)
        scaled[:, self.score_max <= self.score_min] = 0.5
        if len(self.classes_) == 2:
            p1 = scaled[:, 0]
            return np.column_stack([1.0 - p1, p1])
        return normalize_rows(scaled)

    def predict(self, X) -> np.ndarray:
        z = self.decision_values(X)
        if len(self.classes_) == 2:
            return self.classes_[(z[:, 0] > 0).astype(int)]
        return self.classes_[np.argmax(z, axis=1)]

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "classes": self.classes_,
            "support": self.support,
            "dual_coef": self.dual_coef,
            "biases": self.biases,
            "gamma": self.gamma,
            "score_min": self.score_min,
            "score_max": self.score_max,
        }

    @classmethod
    def from_state(cls, state: dict) -> "SVM":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.classes_ = as_classes(state["classes"])
        model.support = state["support"]
        model.dual_coef = state["dual_coef"]
        model.biases = state["biases"]
        model.gamma = float(state["gamma"])
        model.score_min = state["score_min"]
        model.score_max = state["score_max"]
        return model


class SVR(FittedModel):
    """Epsilon-insensitive RBF regression via the doubled SMO dual."""

    kind = "svr"

    def __init__(self):
        super().__init__()
        self.support: np.ndarray | None = None
        self.beta: np.ndarray | None = None
        self.bias: float = 0.0
        self.gamma: float = 1.0
        self.kkt_gap: float = np.inf

    def fit(self, X, y, params: dict, seed: int = 0) -> "SVR":
        X = as_values(X)
        y = check_regression_target(y)
        self.params = dict(params)
        self.n_features_in_ = X.shape[1]
        C = float(params.get("C", 1.0))
        self.gamma = resolve_gamma(params.get("gamma", "scale"), X.shape[1])
        epsilon = float(params.get("epsilon", _EPSILON))

        keep = _subsample(X.shape[0], SVR_SUBSAMPLE, seed, None)
        X_fit = X[keep]
        y_fit = y[keep]
        n = len(y_fit)
        K = rbf_kernel(X_fit, X_fit, self.gamma)

        # doubled dual: signs s = [+1]*n + [-1]*n, Q = s s^T * tile(K)
        s = np.concatenate([np.ones(n), -np.ones(n)])
        Q = np.empty((2 * n, 2 * n))
        Q[:n, :n] = K
        Q[n:, n:] = K
        Q[:n, n:] = -K
        Q[n:, :n] = -K
        p = np.concatenate([epsilon - y_fit, epsilon + y_fit])
        theta, rho, _, gap = smo_solve(Q, p, s, C, _KKT_TOL, 200 * 2 * n)
        self.kkt_gap = float(gap)
        self.beta = theta[:n] - theta[n:]
        self.bias = -rho
        self.support = X_fit
        return self

    def predict(self, X) -> np.ndarray:
        X = as_values(X)
        self._check_width(X)
        K = rbf_kernel(X, self.support, self.gamma)
        return K @ self.beta + self.bias

    def state_dict(self) -> dict:
        return {
            "params": self.params,
            "n_features_in": self.n_features_in_,
            "support": self.support,
            "beta": self.beta,
            "bias": self.bias,
            "gamma": self.gamma,
        }

    @classmethod
    def from_state(cls, state: dict) -> "SVR":
        model = cls()
        model.params = state["params"]
        model.n_features_in_ = int(state["n_features_in"])
        model.support = state["support"]
        model.beta = state["beta"]
        model.bias = float(state["bias"])
        model.gamma = float(state["gamma"])
        return model
