"""Fit-on-train / apply-anywhere transformers and the no-leakage contract.

Run:  python demos/02_transform_replay.py
"""

import numpy as np

from autotab import (
    ColumnType,
    Dataset,
    SplitConfig,
    apply,
    fit_one_hot,
    fit_standardize,
    fit_tfidf,
    split_dataset,
    stack,
)

rng = np.random.default_rng(0)
n = 12
ds = Dataset.from_columns(
    {
        "height": rng.normal(170, 10, n),
        "city": rng.choice(["oslo", "lima", "pune"], n).astype(object),
        "bio": np.array([f"person number {i} writes a short bio here" for i in range(n)], dtype=object),
    },
    {"height": ColumnType.NUMERIC, "city": ColumnType.CATEGORICAL, "bio": ColumnType.TEXT},
    target=rng.choice(["a", "b"], n).astype(object),
)

train, valid = split_dataset(ds, SplitConfig(train_fraction=0.75, seed=1))

scaler = fit_standardize(train, ["height"])
encoder = fit_one_hot(train, ["city"])
vectorizer = fit_tfidf(train, "bio", max_features=50)

# statistics come from the training rows only...
print("train mean/sd:", scaler.means, scaler.sds)
print("city vocabulary:", encoder.vocabularies["city"])

# ...and are replayed verbatim on validation rows
train_block = stack([apply(vectorizer, train), apply(encoder, train), apply(scaler, train)])
valid_block = stack([apply(vectorizer, valid), apply(encoder, valid), apply(scaler, valid)])
print("train matrix:", train_block)
print("valid matrix:", valid_block)

# applying twice is bit-identical: transformers carry no hidden state
first = apply(scaler, valid).dense()
second = apply(scaler, valid).dense()
print("replay bit-identical:", np.array_equal(first, second))
