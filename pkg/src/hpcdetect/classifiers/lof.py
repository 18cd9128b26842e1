"""Exact local outlier factor with deterministic (distance, row index) neighbor order."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..core import Label
from ..errors import InvalidHyperparam, TooFewPoints
from .model import ModelKind, TrainedModel

LRD_GUARD = 1e-10   # keeps lrd finite when a point coincides with all its neighbors
DEFAULT_THRESHOLD = 1.5


def _distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Euclidean distances from explicit differences (no norm-expansion cancellation)."""
    out = np.empty((A.shape[0], B.shape[0]))
    block = max(1, 4_000_000 // max(1, B.shape[0] * B.shape[1]))
    for s in range(0, A.shape[0], block):
        diff = A[s:s + block, None, :] - B[None, :, :]
        out[s:s + block] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def _neighbors(dist: np.ndarray, k: int) -> np.ndarray:
    # stable sort: equal distances keep ascending column (row index) order
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def _lrd(dist_to_nbrs: np.ndarray, nbrs: np.ndarray, kdist: np.ndarray) -> np.ndarray:
    reach = np.maximum(kdist[nbrs], dist_to_nbrs)
    return 1.0 / np.maximum(reach.mean(axis=1), LRD_GUARD)


def lof_fit(X, k: int = 20, threshold: float = DEFAULT_THRESHOLD,
            feature_names: Optional[Sequence[str]] = None,
            normal_class: Label = Label.BENIGN) -> TrainedModel:
    from .svm import _unpack

    X, _, names = _unpack(X, None, feature_names)
    n = X.shape[0]
    if k < 1:
        raise InvalidHyperparam(f"k must be >= 1, got {k}")
    if n <= k:
        raise TooFewPoints(f"LOF with k={k} needs more than {k} rows, got {n}")
    dist = _distances(X, X)
    np.fill_diagonal(dist, np.inf)
    nbrs = _neighbors(dist, k)
    nd = np.take_along_axis(dist, nbrs, axis=1)
    kdist = nd[:, -1].copy()
    lrd = _lrd(nd, nbrs, kdist)
    train_scores = lrd[nbrs].mean(axis=1) / lrd
    fitted = {"X": X.copy(), "k_distance": kdist, "lrd": lrd, "train_scores": train_scores}
    return TrainedModel(ModelKind.LOF, {"k": int(k)}, fitted, float(threshold), names,
                        normal_class=Label.parse(normal_class))


def lof_scores(model: TrainedModel, Q: np.ndarray) -> np.ndarray:
    """LOF of each query point with neighbors taken from the fit set."""
    f = model.fitted
    k = model.hyperparams["k"]
    dist = _distances(np.asarray(Q, dtype=np.float64), f["X"])
    nbrs = _neighbors(dist, k)
    nd = np.take_along_axis(dist, nbrs, axis=1)
    lrd_q = _lrd(nd, nbrs, f["k_distance"])
    return f["lrd"][nbrs].mean(axis=1) / lrd_q


def lof_training_scores(model: TrainedModel) -> np.ndarray:
    """LOF of the fit points themselves (each point excluded from its own neighborhood)."""
    return model.fitted["train_scores"].copy()
