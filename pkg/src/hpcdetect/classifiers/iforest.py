"""Isolation forest with exact harmonic numbers in the path-length normalizer."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ..core import Label
from ..errors import EmptyMatrix, InvalidHyperparam
from .model import ModelKind, TrainedModel


@lru_cache(maxsize=None)
def _harmonic_table(m: int) -> tuple[float, ...]:
    table = [0.0]
    acc = 0.0
    for i in range(1, m + 1):
        acc = math.fsum((acc, 1.0 / i))
        table.append(acc)
    return tuple(table)


def harmonic(m: int) -> float:
    return _harmonic_table(max(256, m))[m]


def c_factor(m: int) -> float:
    """Average unsuccessful-search path length in a BST of m nodes; c(1) = c(0) = 0."""
    if m <= 1:
        return 0.0
    return 2.0 * harmonic(m - 1) - 2.0 * (m - 1) / m


def _build_tree(X: np.ndarray, idx: np.ndarray, limit: int, rng, nodes: dict):
    """Append one tree's nodes to the flat arrays in ``nodes``; returns the root id."""
    node = len(nodes["feature"])
    nodes["feature"].append(-1)
    nodes["threshold"].append(0.0)
    nodes["left"].append(-1)
    nodes["right"].append(-1)
    nodes["size"].append(int(idx.size))
    nodes["depth"].append(0)

    stack = [(node, idx, 0)]
    while stack:
        nid, rows, depth = stack.pop()
        nodes["depth"][nid] = depth
        if depth >= limit or rows.size <= 1:
            continue
        sub = X[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        usable = np.nonzero(hi > lo)[0]
        if usable.size == 0:
            continue
        q = int(usable[rng.integers(usable.size)])
        p = float(rng.uniform(lo[q], hi[q]))
        go_left = sub[:, q] < p
        children = []
        for part in (rows[go_left], rows[~go_left]):
            cid = len(nodes["feature"])
            nodes["feature"].append(-1)
            nodes["threshold"].append(0.0)
            nodes["left"].append(-1)
            nodes["right"].append(-1)
            nodes["size"].append(int(part.size))
            nodes["depth"].append(depth + 1)
            children.append((cid, part))
        nodes["feature"][nid] = q
        nodes["threshold"][nid] = p
        nodes["left"][nid] = children[0][0]
        nodes["right"][nid] = children[1][0]
        for cid, part in reversed(children):
            stack.append((cid, part, depth + 1))
    return node


def iforest_fit(X, n_trees: int = 100, psi: int = 256, seed: int = 0,
                contamination: float = 0.1,
                feature_names: Optional[Sequence[str]] = None,
                normal_class: Label = Label.BENIGN) -> TrainedModel:
    from .svm import _unpack

    X, _, names = _unpack(X, None, feature_names)
    n = X.shape[0]
    if n == 0:
        raise EmptyMatrix("isolation forest needs at least one row")
    if n_trees < 1 or psi < 2:
        raise InvalidHyperparam("n_trees must be >= 1 and psi >= 2")
    if not 0.0 < contamination < 0.5:
        raise InvalidHyperparam(f"contamination must be in (0, 0.5), got {contamination}")
    psi_eff = min(psi, n)
    limit = math.ceil(math.log2(psi_eff)) if psi_eff > 1 else 0
    rng = np.random.default_rng(seed)
    nodes = {k: [] for k in ("feature", "threshold", "left", "right", "size", "depth")}
    roots = []
    for _ in range(n_trees):
        sample = np.sort(rng.choice(n, size=psi_eff, replace=False))
        roots.append(_build_tree(X, sample, limit, rng, nodes))
    fitted = {
        "roots": np.array(roots, dtype=np.int64),
        "feature": np.array(nodes["feature"], dtype=np.int64),
        "threshold": np.array(nodes["threshold"], dtype=np.float64),
        "left": np.array(nodes["left"], dtype=np.int64),
        "right": np.array(nodes["right"], dtype=np.int64),
        "size": np.array(nodes["size"], dtype=np.int64),
        "depth": np.array(nodes["depth"], dtype=np.int64),
        "psi_eff": int(psi_eff),
        "height_limit": int(limit),
    }
    hyper = {"n_trees": int(n_trees), "psi": int(psi), "seed": int(seed),
             "contamination": float(contamination)}
    model = TrainedModel(ModelKind.IFOREST, hyper, fitted, 0.0, names,
                         normal_class=Label.parse(normal_class))
    train = iforest_scores(model, X)
    threshold = float(np.quantile(train, 1.0 - contamination))
    return TrainedModel(ModelKind.IFOREST, hyper, fitted, threshold, names,
                        normal_class=Label.parse(normal_class))


def path_lengths(model: TrainedModel, Q: np.ndarray) -> np.ndarray:
    """Mean over trees of (depth of reached leaf + c(leaf size)); shape (m,)."""
    f = model.fitted
    feature, thr, left, right = f["feature"], f["threshold"], f["left"], f["right"]
    size, depth = f["size"], f["depth"]
    c_of_size = np.array([c_factor(int(s)) for s in range(int(size.max()) + 1)])
    m = Q.shape[0]
    rows = np.arange(m)
    total = np.zeros(m)
    for root in f["roots"]:
        node = np.full(m, root, dtype=np.int64)
        while True:
            feat = feature[node]
            inner = feat >= 0
            if not inner.any():
                break
            ni, fi = node[inner], feat[inner]
            go_left = Q[rows[inner], fi] < thr[ni]
            node[inner] = np.where(go_left, left[ni], right[ni])
        total += depth[node] + c_of_size[size[node]]
    return total / len(f["roots"])


def iforest_scores(model: TrainedModel, Q: np.ndarray) -> np.ndarray:
    """s(x) = 2 ** (-E[h(x)] / c(psi)), in (0, 1); larger is more anomalous."""
    norm = c_factor(model.fitted["psi_eff"])
    return np.power(2.0, -path_lengths(model, np.asarray(Q, dtype=np.float64)) / norm)


def tree_depths(model: TrainedModel) -> list[int]:
    """Maximum node depth of every tree."""
    f = model.fitted
    roots = list(f["roots"]) + [len(f["feature"])]
    return [int(f["depth"][a:b].max()) for a, b in zip(roots[:-1], roots[1:])]
