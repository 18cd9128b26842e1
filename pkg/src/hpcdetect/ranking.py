"""Supervised per-feature relevance scores: Fisher score and information gain."""

from __future__ import annotations

import numpy as np

from .errors import SingleClass
from .features import FeatureMatrix

FISHER_GUARD = 1e-12


def _prepare(X, labels):
    if isinstance(X, FeatureMatrix):
        if labels is None:
            labels = X.labels
        X = X.rows
    X = np.asarray(X, dtype=np.float64)
    if labels is None:
        raise SingleClass("labels are required")
    y = np.asarray(labels).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"{y.shape[0]} labels for {X.shape[0]} rows")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise SingleClass("need at least two classes")
    if counts.min() < 2:
        raise SingleClass("every class needs at least two rows")
    return X, y, classes


def fisher_scores(X, labels=None) -> np.ndarray:
    """F_j = sum_c n_c (mu_cj - mu_j)^2 / (sum_c n_c var_cj + 1e-12), population variances."""
    X, y, classes = _prepare(X, labels)
    mu = X.mean(axis=0)
    num = np.zeros(X.shape[1])
    den = np.zeros(X.shape[1])
    for c in classes:
        Xc = X[y == c]
        n_c = Xc.shape[0]
        num += n_c * (Xc.mean(axis=0) - mu) ** 2
        den += n_c * Xc.var(axis=0)
    return num / (den + FISHER_GUARD)


def _entropy(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    tot = counts.sum()
    if tot <= 0:
        return 0.0
    p = counts[counts > 0] / tot
    return float(-(p * np.log2(p)).sum())


def equal_width_bins(col, bins: int) -> np.ndarray:
    """Bin index per value; the maximum lands in the last bin, constants in bin 0."""
    lo, hi = float(col.min()), float(col.max())
    if hi <= lo:
        return np.zeros(col.shape[0], dtype=np.int64)
    idx = np.floor((col - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def information_gain(X, labels=None, bins: int = 10) -> np.ndarray:
    """IG_j = H(y) - sum_b p(b) H(y | bin b) in bits, equal-width bins over the observed range."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    X, y, classes = _prepare(X, labels)
    class_idx = np.searchsorted(classes, y)
    h_y = _entropy(np.bincount(class_idx))
    n = X.shape[0]
    out = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        b = equal_width_bins(X[:, j], bins)
        table = np.zeros((bins, classes.size))
        np.add.at(table, (b, class_idx), 1)
        cond = sum(table[k].sum() / n * _entropy(table[k]) for k in range(bins))
        out[j] = max(h_y - cond, 0.0)
    return out


def top_k(scores, k: int) -> list[int]:
    """Indices of the k largest scores; ties go to the lower column index."""
    scores = np.asarray(scores)
    order = sorted(range(scores.size), key=lambda i: (-scores[i], i))
    return sorted(order[:k])
