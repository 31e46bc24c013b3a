"""Fit-on-train / apply-anywhere feature transformers.

Every transformer learns its state exclusively from the rows it was fitted
on and replays that state verbatim on any later dataset.  Outputs are
:class:`FeatureMatrix` blocks that :func:`stack` concatenates into the single
numeric matrix models consume.
"""

from __future__ import annotations

import re

import numpy as np
import scipy.sparse as sp

from .data import ColumnType, Dataset
from .errors import TransformError

_TOKEN_RE = re.compile(r"\b\w+\b")


def tokenize(text: str) -> list[str]:
    """Lowercase and extract word tokens (letters, digits, underscore)."""
    return _TOKEN_RE.findall(text.lower())


class FeatureMatrix:
    """Dense or sparse real matrix with per-column provenance labels.

    Construction validates that no entry is NaN or infinite.
    """

    def __init__(self, values, column_labels: list[str]):
        if sp.issparse(values):
            values = values.tocsr()
            finite = np.isfinite(values.data).all()
        else:
            values = np.asarray(values, dtype=float)
            if values.ndim != 2:
                raise TransformError(f"feature matrix must be 2-D, got shape {values.shape}")
            finite = np.isfinite(values).all()
        if not finite:
            raise TransformError("feature matrix contains NaN or infinite entries")
        if values.shape[1] != len(column_labels):
            raise TransformError(
                f"{values.shape[1]} columns but {len(column_labels)} labels"
            )
        self.values = values
        self.column_labels = list(column_labels)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.values)

    def dense(self) -> np.ndarray:
        return self.values.toarray() if self.is_sparse else self.values

    def select_columns(self, mask) -> "FeatureMatrix":
        idx = np.flatnonzero(np.asarray(mask))
        labels = [self.column_labels[j] for j in idx]
        return FeatureMatrix(self.values[:, idx], labels)

    def __repr__(self) -> str:
        kind = "sparse" if self.is_sparse else "dense"
        return f"FeatureMatrix({self.rows}x{self.cols}, {kind})"


def stack(blocks: list[FeatureMatrix]) -> FeatureMatrix:
    """Horizontally concatenate feature blocks sharing a row count.

    The result is sparse if any block is sparse; column order follows block
    order, so stacking is associative.
    """
    if not blocks:
        raise TransformError("nothing to stack")
    if len(blocks) == 1:
        return blocks[0]
    rows = {b.rows for b in blocks}
    if len(rows) != 1:
        raise TransformError(f"row-count mismatch across blocks: {sorted(rows)}")
    labels = [lab for b in blocks for lab in b.column_labels]
    if any(b.is_sparse for b in blocks):
        values = sp.hstack([b.values for b in blocks], format="csr")
    else:
        values = np.hstack([b.values for b in blocks])
    return FeatureMatrix(values, labels)


class FittedTransformer:
    """Common surface of the fitted transformers (fit once, apply anywhere)."""

    kind: str = ""

    def transform(self, dataset: Dataset) -> FeatureMatrix:
        raise NotImplementedError

    def state_dict(self) -> dict:
        raise NotImplementedError


def _require_columns(dataset: Dataset, names: list[str]):
    missing = [n for n in names if n not in dataset.feature_names]
    if missing:
        raise TransformError(f"dataset is missing fitted columns: {missing}")


class OneHot(FittedTransformer):
    """One output column per (categorical column, training category) pair.

    Vocabularies are the distinct training categories sorted lexicographically;
    categories unseen during fitting encode to all-zero blocks.
    """

    kind = "onehot"

    def __init__(self, vocabularies: dict[str, list[str]]):
        self.vocabularies = {k: list(v) for k, v in vocabularies.items()}

    @classmethod
    def fit(cls, train: Dataset, columns: list[str]) -> "OneHot":
        vocabularies = {}
        for name in columns:
            if train.schema(name).ctype is not ColumnType.CATEGORICAL:
                raise TransformError(f"column {name!r} is not categorical")
            values = train.column(name)
            vocabularies[name] = sorted({str(v) for v in values if v is not None})
        return cls(vocabularies)

    def transform(self, dataset: Dataset) -> FeatureMatrix:
        _require_columns(dataset, list(self.vocabularies))
        n = dataset.n_rows
        blocks = []
        labels = []
        for name, vocab in self.vocabularies.items():
            index = {cat: j for j, cat in enumerate(vocab)}
            block = np.zeros((n, len(vocab)))
            col = dataset.column(name)
            for i, v in enumerate(col):
                j = index.get(v if v is None else str(v))
                if j is not None:
                    block[i, j] = 1.0
            blocks.append(block)
            labels.extend(f"{name}={cat}" for cat in vocab)
        values = np.hstack(blocks) if blocks else np.zeros((n, 0))
        return FeatureMatrix(values, labels)

    def state_dict(self) -> dict:
        return {"vocabularies": self.vocabularies}

    @classmethod
    def from_state(cls, state: dict) -> "OneHot":
        return cls(state["vocabularies"])


class Standardize(FittedTransformer):
    """Per-column (x - mean) / sd using training statistics.

    The standard deviation uses the population (1/N) convention; columns that
    are constant on the training rows are emitted as all zeros.
    """

    kind = "standardize"

    def __init__(self, columns: list[str], means: np.ndarray, sds: np.ndarray):
        self.columns = list(columns)
        self.means = np.asarray(means, dtype=float)
        self.sds = np.asarray(sds, dtype=float)

    @classmethod
    def fit(cls, train: Dataset, columns: list[str]) -> "Standardize":
        for name in columns:
            if train.schema(name).ctype is not ColumnType.NUMERIC:
                raise TransformError(f"column {name!r} is not numeric")
        matrix = np.column_stack([train.column(n) for n in columns])
        if not np.isfinite(matrix).all():
            raise TransformError("standardize requires imputed input (found NaN)")
        means = matrix.mean(axis=0)
        sds = matrix.std(axis=0)
        return cls(columns, means, sds)

    def transform(self, dataset: Dataset) -> FeatureMatrix:
        _require_columns(dataset, self.columns)
        matrix = np.column_stack([dataset.column(n) for n in self.columns])
        safe = np.where(self.sds > 0, self.sds, 1.0)
        out = (matrix - self.means) / safe
        out[:, self.sds == 0] = 0.0
        return FeatureMatrix(out, [f"std({n})" for n in self.columns])

    def state_dict(self) -> dict:
        return {"columns": self.columns, "means": self.means, "sds": self.sds}

    @classmethod
    def from_state(cls, state: dict) -> "Standardize":
        return cls(state["columns"], state["means"], state["sds"])


class TfIdf(FittedTransformer):
    """Term-frequency times smoothed inverse-document-frequency weighting.

    The vocabulary holds the ``max_features`` terms with the highest training
    document frequency (ties broken lexicographically).  Weights are
    tf(t, d) * (1 + ln((1 + N) / (1 + df(t)))) with rows L2-normalized;
    output is sparse.  Documents containing only unseen terms map to zero rows.
    """

    kind = "tfidf"

    def __init__(self, column: str, vocabulary: list[str], idf: np.ndarray):
        self.column = column
        self.vocabulary = list(vocabulary)
        self.idf = np.asarray(idf, dtype=float)
        self._index = {t: j for j, t in enumerate(self.vocabulary)}

    @classmethod
    def fit(cls, train: Dataset, column: str, max_features: int = 100_000) -> "TfIdf":
        if train.schema(column).ctype is not ColumnType.TEXT:
            raise TransformError(f"column {column!r} is not text")
        if max_features < 1:
            raise TransformError("max_features must be positive")
        docs = train.column(column)
        df: dict[str, int] = {}
        n_docs = len(docs)
        for doc in docs:
            for term in set(tokenize(str(doc))):
                df[term] = df.get(term, 0) + 1
        if not df:
            raise TransformError(f"column {column!r} yields an empty vocabulary")
        ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
        vocabulary = [t for t, _ in ranked]
        counts = np.array([c for _, c in ranked], dtype=float)
        idf = 1.0 + np.log((1.0 + n_docs) / (1.0 + counts))
        return cls(column, vocabulary, idf)

    def transform(self, dataset: Dataset) -> FeatureMatrix:
        _require_columns(dataset, [self.column])
        docs = dataset.column(self.column)
        indptr = [0]
        indices: list[int] = []
        values: list[float] = []
        for doc in docs:
            counts: dict[int, int] = {}
            for term in tokenize(str(doc)):
                j = self._index.get(term)
                if j is not None:
                    counts[j] = counts.get(j, 0) + 1
            row_idx = sorted(counts)
            row_val = [counts[j] * self.idf[j] for j in row_idx]
            norm = np.sqrt(sum(v * v for v in row_val))
            if norm > 0:
                row_val = [v / norm for v in row_val]
            indices.extend(row_idx)
            values.extend(row_val)
            indptr.append(len(indices))
        matrix = sp.csr_matrix(
            (np.asarray(values, dtype=float), np.asarray(indices, dtype=np.int32), indptr),
            shape=(len(docs), len(self.vocabulary)),
        )
        labels = [f"tfidf({self.column})={t}" for t in self.vocabulary]
        return FeatureMatrix(matrix, labels)

    def state_dict(self) -> dict:
        return {"column": self.column, "vocabulary": self.vocabulary, "idf": self.idf}

    @classmethod
    def from_state(cls, state: dict) -> "TfIdf":
        return cls(state["column"], state["vocabulary"], state["idf"])


def fit_one_hot(train: Dataset, columns: list[str]) -> OneHot:
    return OneHot.fit(train, columns)


def fit_standardize(train: Dataset, columns: list[str]) -> Standardize:
    return Standardize.fit(train, columns)


def fit_tfidf(train: Dataset, column: str, max_features: int = 100_000) -> TfIdf:
    return TfIdf.fit(train, column, max_features)


def apply(transformer: FittedTransformer, data: Dataset) -> FeatureMatrix:
    """Apply a fitted transformer; output depends only on (state, data)."""
    return transformer.transform(data)
