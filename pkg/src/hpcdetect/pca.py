"""Principal component analysis on top of a cyclic Jacobi eigen-solver."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, InvalidHyperparam, NoConvergence
from .features import FeatureMatrix

JACOBI_TOL = 1e-10
MAX_SWEEPS = 100


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))   # direct sum; |A|^2 - |diag|^2 cancels badly
    return float(np.sqrt((off * off).sum()))


def jacobi_eigh(a, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||A||_F)``. Returns ``(eigenvalues, eigenvectors)`` sorted by
    descending eigenvalue, eigenvectors as columns, each signed so its largest
    magnitude entry is positive.
    """
    a = np.array(a, dtype=np.float64)
    d = a.shape[0]
    if a.shape != (d, d):
        raise ValueError(f"expected a square matrix, got {a.shape}")
    a = 0.5 * (a + a.T)
    v = np.eye(d)
    limit = tol * max(1.0, float(np.linalg.norm(a)))
    for sweep in range(max_sweeps + 1):
        if _off_norm(a) < limit:
            break
        if sweep == max_sweeps:
            raise NoConvergence(max_sweeps, "Jacobi eigen-solver")
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta   # theta**2 would overflow; same value to rounding
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = sorted(range(d), key=lambda i: (-w[i], i))
    w, v = w[order], v[:, order]
    for j in range(d):
        k = int(np.argmax(np.abs(v[:, j])))
        if v[k, j] < 0:
            v[:, j] = -v[:, j]
    return w, v


@dataclass(frozen=True)
class PcaModel:
    components: np.ndarray          # k x d, orthonormal rows
    explained_variance: np.ndarray  # k, non-increasing
    mean: np.ndarray                # d
    eigenvalues: np.ndarray         # all d eigenvalues of the covariance

    @property
    def total_variance(self) -> float:
        return float(self.eigenvalues.sum())

    @property
    def explained_ratio(self) -> np.ndarray:
        tot = self.total_variance
        return self.explained_variance / tot if tot > 0 else np.zeros_like(self.explained_variance)


def fit_pca(X, variance_target: float = 0.95) -> PcaModel:
    """Keep the smallest number of leading components reaching ``variance_target``
    of the total (population) variance."""
    rows = X.rows if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] == 0:
        raise EmptyMatrix(f"cannot fit PCA on shape {getattr(rows, 'shape', None)}")
    if not 0.0 < variance_target <= 1.0:
        raise InvalidHyperparam(f"variance_target must be in (0, 1], got {variance_target}")
    n, d = rows.shape
    if n <= d:
        warnings.warn(f"PCA fitted on {n} rows for {d} features", RuntimeWarning, stacklevel=2)
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / n
    w, v = jacobi_eigh(cov)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        k = d
    else:
        cum = np.cumsum(w) / total
        hits = np.nonzero(cum >= variance_target - 1e-12)[0]
        k = int(hits[0]) + 1 if hits.size else d
    return PcaModel(v[:, :k].T.copy(), w[:k].copy(), mean, w)


def apply_pca(p: PcaModel, X):
    if isinstance(X, FeatureMatrix):
        proj = (X.rows - p.mean) @ p.components.T
        names = [f"pc{i + 1}" for i in range(p.components.shape[0])]
        return X.with_rows(proj, names)
    return (np.asarray(X, dtype=np.float64) - p.mean) @ p.components.T


def reconstruct(p: PcaModel, Z) -> np.ndarray:
    return np.asarray(Z, dtype=np.float64) @ p.components + p.mean
