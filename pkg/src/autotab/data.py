"""CSV ingestion, column type inference, task inference and imputation.

A :class:`Dataset` is the canonical container consumed by the rest of the
package: an ordered list of per-column schemas, columnar cell storage, and an
optional target vector.  Columns are typed as numeric, categorical or text by
:func:`infer_column_type`; users can override any column's type at load time.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateTargetError, SchemaError

#: Cell values treated as missing after surrounding whitespace is stripped.
MISSING_MARKERS = frozenset({"", "?", "NA"})

#: Sentinel category substituted for missing categorical/text cells.
MISSING_TOKEN = "__missing__"

# Numeric column: at least this fraction of non-missing cells must parse as
# finite numbers.  Stray sentinel strings below the threshold become missing.
_NUMERIC_FRACTION = 0.99

# Text column: mean whitespace-token count at or above this, or more than
# half the values distinct with at least one multi-word value.
_TEXT_MEAN_TOKENS = 3.0
_TEXT_DISTINCT_RATIO = 0.5

# Numeric targets with at most this many distinct integer values are read as
# class labels rather than a regression target.
_MULTICLASS_MAX_LABELS = 15


class ColumnType(enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TEXT = "text"


class TaskType(enum.Enum):
    BINARY = "binary"
    MULTICLASS = "multiclass"
    REGRESSION = "regression"

    @property
    def is_classification(self) -> bool:
        return self is not TaskType.REGRESSION


@dataclass(frozen=True)
class ColumnSchema:
    """Schema of one feature column.

    ``user_override``, when present, replaces the inferred type; ``ctype``
    always holds the effective type.
    """

    name: str
    ctype: ColumnType
    distinct_count: int
    missing_count: int
    user_override: ColumnType | None = None


def _is_missing(raw: str) -> bool:
    return raw.strip() in MISSING_MARKERS


def _parse_number(raw: str) -> float | None:
    try:
        value = float(raw)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def infer_column_type(values: list[str]) -> ColumnType:
    """Classify a column of raw strings as numeric, categorical or text.

    The heuristic is a pure function of the multiset of values: numeric when
    at least 99% of the non-missing cells parse as finite numbers; otherwise
    text when the mean whitespace-token count is >= 3, or when more than half
    the values are distinct and at least one contains whitespace; otherwise
    categorical.

    Raises
    ------
    SchemaError
        If every value is missing (the column should be dropped or
        overridden by the caller).
    """
    if not values:
        raise SchemaError("cannot infer a type from an empty column")
    present = [v for v in values if not _is_missing(v)]
    if not present:
        raise SchemaError("column is entirely missing; drop it or supply an override")

    parsed = sum(1 for v in present if _parse_number(v) is not None)
    if parsed / len(present) >= _NUMERIC_FRACTION:
        return ColumnType.NUMERIC

    mean_tokens = sum(len(v.split()) for v in present) / len(present)
    if mean_tokens >= _TEXT_MEAN_TOKENS:
        return ColumnType.TEXT
    distinct_ratio = len(set(present)) / len(present)
    if distinct_ratio > _TEXT_DISTINCT_RATIO and any(" " in v or "\t" in v for v in present):
        return ColumnType.TEXT
    return ColumnType.CATEGORICAL


def infer_task(target: np.ndarray) -> TaskType:
    """Infer the prediction task from the target vector.

    Two distinct labels mean binary classification.  Non-numeric labels, or
    numeric labels that are all integers with at most 15 distinct values,
    mean multiclass classification.  Anything else is regression.
    """
    if len(target) == 0:
        raise DegenerateTargetError("target is empty")
    distinct = np.unique(target)
    if len(distinct) == 1:
        raise DegenerateTargetError(
            f"target has a single distinct label ({distinct[0]!r}); nothing to learn"
        )
    if len(distinct) == 2:
        return TaskType.BINARY
    if target.dtype.kind not in "fiu":
        return TaskType.MULTICLASS
    values = target.astype(float)
    if len(distinct) <= _MULTICLASS_MAX_LABELS and np.all(values == np.round(values)):
        return TaskType.MULTICLASS
    return TaskType.REGRESSION


class Dataset:
    """Tabular container: ordered column schemas plus columnar cell storage.

    Numeric columns are float64 arrays with NaN for missing cells; categorical
    and text columns are object arrays with ``None`` for missing cells.  The
    optional target is a float64 or object array aligned to the rows.
    Instances are immutable by convention; every transformation returns a new
    Dataset.
    """

    def __init__(
        self,
        columns: list[ColumnSchema],
        data: dict[str, np.ndarray],
        target: np.ndarray | None = None,
        target_name: str | None = None,
        task: TaskType | None = None,
    ):
        if set(data) != {c.name for c in columns}:
            raise SchemaError("column schemas and data arrays disagree")
        lengths = {len(a) for a in data.values()}
        if target is not None:
            lengths.add(len(target))
        if len(lengths) > 1:
            raise SchemaError(f"columns have inconsistent lengths: {sorted(lengths)}")
        self.columns = list(columns)
        self._data = {name: np.asarray(arr) for name, arr in data.items()}
        self.target = None if target is None else np.asarray(target)
        self.target_name = target_name
        self.task = task

    # -- structure ---------------------------------------------------------

    @property
    def n_rows(self) -> int:
        if self._data:
            return len(next(iter(self._data.values())))
        return 0 if self.target is None else len(self.target)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> np.ndarray:
        try:
            return self._data[name]
        except KeyError:
            raise SchemaError(f"no column named {name!r}") from None

    def schema(self, name: str) -> ColumnSchema:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"no column named {name!r}")

    def columns_of_type(self, ctype: ColumnType) -> list[str]:
        return [c.name for c in self.columns if c.ctype is ctype]

    def row(self, i: int) -> list:
        return [self._data[c.name][i] for c in self.columns]

    def subset(self, indices) -> "Dataset":
        """Row subset as a new Dataset (schemas are carried over unchanged)."""
        idx = np.asarray(indices)
        data = {name: arr[idx] for name, arr in self._data.items()}
        target = None if self.target is None else self.target[idx]
        return Dataset(self.columns, data, target, self.target_name, self.task)

    def __repr__(self) -> str:
        return f"Dataset({self.n_rows} rows, {self.n_cols} columns, task={self.task})"

    # -- construction helpers ----------------------------------------------

    @classmethod
    def from_columns(
        cls,
        columns: dict[str, np.ndarray],
        types: dict[str, ColumnType],
        target: np.ndarray | None = None,
        task: TaskType | None = None,
        target_name: str = "target",
    ) -> "Dataset":
        """Build a Dataset from already-typed arrays (tests and demos)."""
        schemas = []
        data = {}
        for name, values in columns.items():
            ctype = types[name]
            arr = np.asarray(values, dtype=float if ctype is ColumnType.NUMERIC else object)
            if ctype is ColumnType.NUMERIC:
                missing = int(np.count_nonzero(~np.isfinite(arr)))
                distinct = len(np.unique(arr[np.isfinite(arr)]))
            else:
                missing = sum(1 for v in arr if v is None)
                distinct = len({v for v in arr if v is not None})
            schemas.append(ColumnSchema(name, ctype, distinct, missing))
            data[name] = arr
        target_arr = None
        if target is not None:
            target_arr = np.asarray(target)
            if task is None:
                task = infer_task(target_arr)
        return cls(schemas, data, target_arr, target_name, task)


def _convert_column(name: str, raw: list[str], ctype: ColumnType) -> tuple[np.ndarray, ColumnSchema]:
    if ctype is ColumnType.NUMERIC:
        out = np.empty(len(raw), dtype=float)
        for i, v in enumerate(raw):
            if _is_missing(v):
                out[i] = np.nan
            else:
                parsed = _parse_number(v)
                # unparsable stragglers under the 99% rule become missing
                out[i] = np.nan if parsed is None else parsed
        missing = int(np.count_nonzero(np.isnan(out)))
        distinct = len(np.unique(out[~np.isnan(out)]))
    else:
        out = np.empty(len(raw), dtype=object)
        for i, v in enumerate(raw):
            out[i] = None if _is_missing(v) else v.strip()
        missing = sum(1 for v in out if v is None)
        distinct = len({v for v in out if v is not None})
    return out, ColumnSchema(name, ctype, distinct, missing)


def _convert_target(raw: list[str], column: str) -> np.ndarray:
    missing_rows = [i for i, v in enumerate(raw) if _is_missing(v)]
    if missing_rows:
        raise SchemaError(
            f"target column {column!r} has missing values (first at row {missing_rows[0] + 1})"
        )
    numbers = [_parse_number(v) for v in raw]
    if all(n is not None for n in numbers):
        return np.asarray(numbers, dtype=float)
    return np.asarray([v.strip() for v in raw], dtype=object)


def load_csv(
    path,
    target_column: str | None = None,
    overrides: dict[str, ColumnType] | None = None,
) -> Dataset:
    """Load an RFC-4180 CSV file (UTF-8, first row is the header).

    Empty cells, ``?`` and ``NA`` are treated as missing.  Column types are
    inferred per column unless overridden; the target column, when named, is
    extracted out of the feature columns and the task type inferred from it.
    Columns whose cells are all missing are dropped with a warning.
    """
    overrides = dict(overrides or {})
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: file is empty") from None
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise SchemaError(
                        f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
                    )
                rows.append(row)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc

    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate column names in header")
    if target_column is not None and target_column not in header:
        raise SchemaError(f"target column {target_column!r} not found in header {header}")
    for name in overrides:
        if name not in header:
            raise SchemaError(f"type override names unknown column {name!r}")
        if name == target_column:
            raise SchemaError(f"type override names the target column {name!r}")

    by_name = {name: [row[j] for row in rows] for j, name in enumerate(header)}

    target = None
    task = None
    if target_column is not None:
        target = _convert_target(by_name.pop(target_column), target_column)
        task = infer_task(target)

    schemas: list[ColumnSchema] = []
    data: dict[str, np.ndarray] = {}
    for name in header:
        if name == target_column:
            continue
        raw = by_name[name]
        override = overrides.get(name)
        if override is not None:
            ctype = override
        else:
            try:
                ctype = infer_column_type(raw)
            except SchemaError:
                warnings.warn(f"dropping column {name!r}: all values missing", stacklevel=2)
                continue
        arr, schema = _convert_column(name, raw, ctype)
        if override is not None:
            schema = replace(schema, user_override=override)
        schemas.append(schema)
        data[name] = arr

    return Dataset(schemas, data, target, target_column, task)


def load_csv_like(path, schema: list[ColumnSchema]) -> Dataset:
    """Load a CSV and coerce it to a previously learned schema.

    Every schema column must be present (missing ones are reported by name);
    extra columns, including any target, are ignored.  Cell parsing follows
    the stored column types, not fresh inference.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: file is empty") from None
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise SchemaError(
                        f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
                    )
                rows.append(row)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc

    missing = [c.name for c in schema if c.name not in header]
    if missing:
        raise SchemaError(f"{path}: input is missing required columns: {missing}")
    position = {name: j for j, name in enumerate(header)}
    data: dict[str, np.ndarray] = {}
    for col in schema:
        raw = [row[position[col.name]] for row in rows]
        arr, _ = _convert_column(col.name, raw, col.ctype)
        data[col.name] = arr
    return Dataset(list(schema), data)


def write_csv(dataset: Dataset, path) -> None:
    """Write a Dataset back to CSV (missing cells become empty strings)."""
    names = dataset.feature_names
    arrays = [dataset.column(n) for n in names]
    header = list(names)
    if dataset.target is not None:
        header.append(dataset.target_name or "target")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n_rows):
            row = []
            for arr, col in zip(arrays, dataset.columns):
                v = arr[i]
                if col.ctype is ColumnType.NUMERIC:
                    row.append("" if not math.isfinite(v) else repr(float(v)))
                else:
                    row.append("" if v is None else str(v))
            if dataset.target is not None:
                t = dataset.target[i]
                row.append(repr(float(t)) if isinstance(t, (int, float, np.floating)) else str(t))
            writer.writerow(row)


class Imputer:
    """Fill missing cells with statistics learned from training rows only.

    Numeric columns use the training median; categorical and text columns use
    the ``__missing__`` sentinel token.  The learned medians are replayed
    verbatim on any later dataset, never refit.
    """

    kind = "imputer"

    def __init__(self, medians: dict[str, float]):
        self.medians = dict(medians)

    @classmethod
    def fit(cls, train: Dataset) -> "Imputer":
        medians: dict[str, float] = {}
        for col in train.columns:
            if col.ctype is ColumnType.NUMERIC:
                values = train.column(col.name)
                present = values[np.isfinite(values)]
                if len(present) == 0:
                    raise SchemaError(
                        f"numeric column {col.name!r} has no observed training values"
                    )
                medians[col.name] = float(np.median(present))
        return cls(medians)

    def apply(self, dataset: Dataset) -> Dataset:
        data: dict[str, np.ndarray] = {}
        schemas: list[ColumnSchema] = []
        for col in dataset.columns:
            arr = dataset.column(col.name)
            if col.ctype is ColumnType.NUMERIC:
                filled = np.where(np.isfinite(arr), arr, self.medians[col.name])
                distinct = len(np.unique(filled))
            else:
                filled = np.array(
                    [MISSING_TOKEN if v is None else v for v in arr], dtype=object
                )
                distinct = len(set(filled))
            data[col.name] = filled
            schemas.append(replace(col, distinct_count=distinct, missing_count=0))
        return Dataset(schemas, data, dataset.target, dataset.target_name, dataset.task)

    def state_dict(self) -> dict:
        return {"medians": self.medians}

    @classmethod
    def from_state(cls, state: dict) -> "Imputer":
        return cls(state["medians"])


def impute(dataset: Dataset) -> Dataset:
    """Fit an Imputer on the dataset and apply it in place of the original.

    Inside a pipeline the imputer is fitted on the training partition and
    replayed on validation; this convenience form fits and applies on the
    same data.
    """
    return Imputer.fit(dataset).apply(dataset)
