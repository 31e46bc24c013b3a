"""Histogram-based CART tree growth (numba kernels) shared by RF and GBM.

Features are quantized once to at most 255 per-feature cut points; split
search then scans bin histograms.  With fewer than 256 distinct values per
feature the candidate set is exact CART.  Ties between equally good splits go
to the lowest feature index, then the lowest threshold, which keeps growth
deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MAX_BINS = 256


class BinMapper:
    """Per-feature quantile cut points; maps real values to uint8 codes."""

    def __init__(self, cuts: list[np.ndarray]):
        self.cuts = [np.asarray(c, dtype=float) for c in cuts]

    @classmethod
    def fit(cls, X: np.ndarray) -> "BinMapper":
        cuts = []
        for j in range(X.shape[1]):
            uniq = np.unique(X[:, j])
            if len(uniq) <= _MAX_BINS:
                c = (uniq[:-1] + uniq[1:]) / 2.0
            else:
                qs = np.quantile(X[:, j], np.arange(1, _MAX_BINS) / _MAX_BINS)
                c = np.unique(qs)
            cuts.append(c)
        return cls(cuts)

    def transform(self, X: np.ndarray) -> np.ndarray:
        codes = np.empty(X.shape, dtype=np.uint8)
        for j, c in enumerate(self.cuts):
            codes[:, j] = np.searchsorted(c, X[:, j], side="right")
        return codes

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([len(c) + 1 for c in self.cuts], dtype=np.int64)

    def state_dict(self) -> dict:
        return {"cuts": list(self.cuts)}

    @classmethod
    def from_state(cls, state: dict) -> "BinMapper":
        return cls(state["cuts"])


class Tree:
    """Flat array representation of one fitted tree."""

    __slots__ = ("feature", "split_bin", "left", "right", "value", "node_count")

    def __init__(self, feature, split_bin, left, right, value, node_count):
        self.feature = feature
        self.split_bin = split_bin
        self.left = left
        self.right = right
        self.value = value
        self.node_count = int(node_count)

    def apply(self, codes: np.ndarray) -> np.ndarray:
        return _apply_tree(codes, self.feature, self.split_bin, self.left, self.right)

    def predict(self, codes: np.ndarray) -> np.ndarray:
        return self.value[self.apply(codes)]

    def state_dict(self) -> dict:
        return {
            "feature": self.feature[: self.node_count],
            "split_bin": self.split_bin[: self.node_count],
            "left": self.left[: self.node_count],
            "right": self.right[: self.node_count],
            "value": self.value[: self.node_count],
            "node_count": self.node_count,
        }

    @classmethod
    def from_state(cls, state: dict) -> "Tree":
        return cls(
            state["feature"],
            state["split_bin"],
            state["left"],
            state["right"],
            state["value"],
            state["node_count"],
        )


@njit(cache=True, nogil=True, inline="always")
def _next_rand(state):
    # xorshift64*; state is a 1-element uint64 array
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= (x << np.uint64(25)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x ^= x >> np.uint64(27)
    state[0] = x
    return (x * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(32)


@njit(cache=True, nogil=True)
def _sample_features(perm, n_select, state):
    d = perm.shape[0]
    for t in range(n_select):
        r = t + _next_rand(state) % np.uint64(d - t)
        tmp = perm[t]
        perm[t] = perm[r]
        perm[r] = tmp
    selected = np.sort(perm[:n_select].copy())
    return selected


@njit(cache=True, nogil=True)
def _grow_tree_cls(
    codes,
    y,
    n_classes,
    pos,
    n_bins,
    min_samples_split,
    max_depth,
    max_features,
    seed,
    feature,
    split_bin,
    left,
    right,
    value,
    importances,
):
    n = pos.shape[0]
    d = codes.shape[1]
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed ^ np.uint64(0x9E3779B97F4A7C15)
    _next_rand(state)
    perm = np.arange(d)
    hist = np.zeros((_MAX_BINS, n_classes), dtype=np.float64)
    counts = np.zeros(n_classes, dtype=np.float64)
    left_cnt = np.zeros(n_classes, dtype=np.float64)

    cap = feature.shape[0]
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    stack_node = np.empty(cap, dtype=np.int64)
    top = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    stack_node[0] = 0
    top = 1
    node_count = 1

    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        node = stack_node[top]
        n_node = hi - lo

        for c in range(n_classes):
            counts[c] = 0.0
        for t in range(lo, hi):
            counts[y[pos[t]]] += 1.0
        sum_sq = 0.0
        majority = 0
        best_c = counts[0]
        for c in range(n_classes):
            sum_sq += counts[c] * counts[c]
            if counts[c] > best_c:
                best_c = counts[c]
                majority = c
        parent_score = n_node - sum_sq / n_node  # n * gini

        make_leaf = (
            n_node < min_samples_split
            or (max_depth >= 0 and depth >= max_depth)
            or parent_score <= 0.0
        )

        best_gain = 0.0
        best_f = -1
        best_b = -1
        if not make_leaf:
            selected = _sample_features(perm, max_features, state)
            for si in range(selected.shape[0]):
                f = selected[si]
                nb = n_bins[f]
                if nb < 2:
                    continue
                for b in range(nb):
                    for c in range(n_classes):
                        hist[b, c] = 0.0
                for t in range(lo, hi):
                    hist[codes[pos[t], f], y[pos[t]]] += 1.0
                for c in range(n_classes):
                    left_cnt[c] = 0.0
                left_n = 0.0
                left_sq = 0.0
                right_sq = sum_sq
                for b in range(nb - 1):
                    row_total = 0.0
                    for c in range(n_classes):
                        h = hist[b, c]
                        if h > 0.0:
                            old = left_cnt[c]
                            left_sq += 2.0 * old * h + h * h
                            rc_old = counts[c] - old
                            right_sq += -2.0 * rc_old * h + h * h
                            left_cnt[c] = old + h
                            row_total += h
                    left_n += row_total
                    right_n = n_node - left_n
                    if left_n == 0.0 or right_n == 0.0:
                        continue
                    score = (left_n - left_sq / left_n) + (right_n - right_sq / right_n)
                    gain = parent_score - score
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_b = b
            if best_f < 0:
                make_leaf = True

        if make_leaf:
            feature[node] = -1
            value[node] = majority
            continue

        importances[best_f] += best_gain
        i = lo
        j = hi
        while i < j:
            if codes[pos[i], best_f] <= best_b:
                i += 1
            else:
                j -= 1
                tmp = pos[i]
                pos[i] = pos[j]
                pos[j] = tmp
        mid = i

        feature[node] = best_f
        split_bin[node] = best_b
        left[node] = node_count
        right[node] = node_count + 1
        stack_lo[top] = lo
        stack_hi[top] = mid
        stack_depth[top] = depth + 1
        stack_node[top] = node_count
        top += 1
        stack_lo[top] = mid
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        stack_node[top] = node_count + 1
        top += 1
        node_count += 2

    return node_count


@njit(cache=True, nogil=True)
def _grow_tree_reg(
    codes,
    target,
    pos,
    n_bins,
    min_samples_split,
    max_depth,
    max_features,
    seed,
    feature,
    split_bin,
    left,
    right,
    value,
    importances,
):
    n = pos.shape[0]
    d = codes.shape[1]
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed ^ np.uint64(0x9E3779B97F4A7C15)
    _next_rand(state)
    perm = np.arange(d)
    hist_sum = np.zeros(_MAX_BINS, dtype=np.float64)
    hist_cnt = np.zeros(_MAX_BINS, dtype=np.float64)

    cap = feature.shape[0]
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    stack_node[0] = 0
    top = 1
    node_count = 1

    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        node = stack_node[top]
        n_node = hi - lo

        s1 = 0.0
        s2 = 0.0
        for t in range(lo, hi):
            v = target[pos[t]]
            s1 += v
            s2 += v * v
        mean = s1 / n_node
        parent_sse = s2 - s1 * s1 / n_node

        make_leaf = (
            n_node < min_samples_split
            or (max_depth >= 0 and depth >= max_depth)
            or parent_sse <= 1e-12
        )

        best_gain = 0.0
        best_f = -1
        best_b = -1
        if not make_leaf:
            base = s1 * s1 / n_node
            selected = _sample_features(perm, max_features, state)
            for si in range(selected.shape[0]):
                f = selected[si]
                nb = n_bins[f]
                if nb < 2:
                    continue
                for b in range(nb):
                    hist_sum[b] = 0.0
                    hist_cnt[b] = 0.0
                for t in range(lo, hi):
                    cbin = codes[pos[t], f]
                    hist_sum[cbin] += target[pos[t]]
                    hist_cnt[cbin] += 1.0
                left_s = 0.0
                left_n = 0.0
                for b in range(nb - 1):
                    left_s += hist_sum[b]
                    left_n += hist_cnt[b]
                    right_n = n_node - left_n
                    if left_n == 0.0 or right_n == 0.0:
                        continue
                    right_s = s1 - left_s
                    gain = left_s * left_s / left_n + right_s * right_s / right_n - base
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_b = b
            if best_f < 0:
                make_leaf = True

        if make_leaf:
            feature[node] = -1
            value[node] = mean
            continue

        importances[best_f] += best_gain
        i = lo
        j = hi
        while i < j:
            if codes[pos[i], best_f] <= best_b:
                i += 1
            else:
                j -= 1
                tmp = pos[i]
                pos[i] = pos[j]
                pos[j] = tmp
        mid = i

        feature[node] = best_f
        split_bin[node] = best_b
        left[node] = node_count
        right[node] = node_count + 1
        stack_lo[top] = lo
        stack_hi[top] = mid
        stack_depth[top] = depth + 1
        stack_node[top] = node_count
        top += 1
        stack_lo[top] = mid
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        stack_node[top] = node_count + 1
        top += 1
        node_count += 2

    return node_count


@njit(cache=True, nogil=True)
def _apply_tree(codes, feature, split_bin, left, right):
    n = codes.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if codes[i, feature[node]] <= split_bin[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


def grow_tree(
    codes: np.ndarray,
    y: np.ndarray,
    pos: np.ndarray,
    n_bins: np.ndarray,
    *,
    classification: bool,
    n_classes: int = 0,
    min_samples_split: int = 2,
    max_depth: int = -1,
    max_features: int | None = None,
    seed: int = 0,
    importances: np.ndarray | None = None,
) -> Tree:
    """Grow one tree over the rows listed in ``pos`` (repeats allowed)."""
    n = len(pos)
    d = codes.shape[1]
    max_features = d if max_features is None else min(max_features, d)
    cap = 2 * n + 1
    feature = np.full(cap, -2, dtype=np.int64)
    split_bin = np.zeros(cap, dtype=np.int64)
    left = np.zeros(cap, dtype=np.int64)
    right = np.zeros(cap, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    if importances is None:
        importances = np.zeros(d)
    args = (
        n_bins,
        min_samples_split,
        max_depth,
        max_features,
        np.uint64(seed),
        feature,
        split_bin,
        left,
        right,
        value,
        importances,
    )
    if classification:
        count = _grow_tree_cls(codes, y.astype(np.int64), n_classes, pos.copy(), *args)
    else:
        count = _grow_tree_reg(codes, y.astype(np.float64), pos.copy(), *args)
    return Tree(feature, split_bin, left, right, value, count)
