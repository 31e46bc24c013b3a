"""Fit every classification family on one toy problem and compare scores.

Run:  python demos/03_model_zoo.py
"""

import numpy as np

from autotab import ModelFamily, auc, fit, predict_score
from autotab.models import is_classifier

rng = np.random.default_rng(7)
n = 500
X = rng.standard_normal((n, 6))
logit = 1.2 * X[:, 0] - 0.8 * X[:, 1] + 0.5 * X[:, 2] * X[:, 3]
y = np.where(rng.random(n) < 1 / (1 + np.exp(-logit)), "yes", "no").astype(object)

train, test = slice(0, 400), slice(400, n)
print(f"{'family':<12s} test AUC")
for family in ModelFamily:
    if not is_classifier(family):
        continue
    params = {"n_estimators": 100} if family in (
        ModelFamily.RANDOM_FOREST, ModelFamily.GRADIENT_BOOSTING
    ) else {}
    model = fit(family, params, X[train], y[train], seed=0)
    scores = predict_score(model, X[test])[:, 1]
    value = auc(y[test] == "yes", scores)
    print(f"{family.value:<12s} {value:.4f}")
