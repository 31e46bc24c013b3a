"""Train/validation splitting, stratified by label for classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import SchemaError, StratificationError


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class Split:
    """Disjoint index lists covering all rows; both sides non-empty."""

    train_indices: np.ndarray
    valid_indices: np.ndarray


def _train_count(n: int, fraction: float) -> int:
    # round-to-nearest, clamped so both sides stay non-empty
    return min(max(int(round(fraction * n)), 1), n - 1)


def split(dataset: Dataset, config: SplitConfig) -> Split:
    """Partition rows into train and validation index lists.

    Stratified splits keep per-class train counts at round(fraction * |c|),
    clamped so every class appears on both sides; shuffling within a class is
    driven only by the seed.  Regression (or non-stratified) splits are seeded
    uniform shuffles.  The result is a pure function of (row count, labels,
    config).
    """
    if dataset.target is None:
        raise SchemaError("cannot split a dataset without a target")
    n = dataset.n_rows
    if n < 2:
        raise SchemaError(f"need at least 2 rows to split, got {n}")
    rng = np.random.default_rng(config.seed)

    if config.stratified:
        labels = dataset.target
        classes, inverse = np.unique(labels, return_inverse=True)
        train_parts = []
        valid_parts = []
        for ci, cls in enumerate(classes):
            members = np.flatnonzero(inverse == ci)
            if len(members) < 2:
                raise StratificationError(
                    f"class {cls!r} has a single member; stratified splitting "
                    f"needs at least 2 per class"
                )
            order = rng.permutation(len(members))
            shuffled = members[order]
            k = _train_count(len(members), config.train_fraction)
            train_parts.append(shuffled[:k])
            valid_parts.append(shuffled[k:])
        train = np.sort(np.concatenate(train_parts))
        valid = np.sort(np.concatenate(valid_parts))
    else:
        order = rng.permutation(n)
        k = _train_count(n, config.train_fraction)
        train = np.sort(order[:k])
        valid = np.sort(order[k:])

    return Split(train_indices=train, valid_indices=valid)


def split_dataset(dataset: Dataset, config: SplitConfig) -> tuple[Dataset, Dataset]:
    """Convenience wrapper returning the two row subsets as Datasets."""
    parts = split(dataset, config)
    return dataset.subset(parts.train_indices), dataset.subset(parts.valid_indices)
