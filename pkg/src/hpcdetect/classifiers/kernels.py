from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InvalidHyperparam


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"   # "linear" | "rbf"
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise InvalidHyperparam(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and self.gamma is not None and not self.gamma > 0:
            raise InvalidHyperparam(f"rbf gamma must be > 0, got {self.gamma}")

    def resolved(self, X: np.ndarray) -> "KernelSpec":
        """Fill in the default gamma = 1 / (d * mean per-feature variance)."""
        if self.kind == "linear" or self.gamma is not None:
            return self
        return KernelSpec("rbf", default_gamma(X))


def default_gamma(X: np.ndarray) -> float:
    d = X.shape[1]
    var = float(X.var(axis=0).mean()) if X.shape[0] > 0 else 0.0
    return 1.0 / (d * var) if var > 0 else 1.0


def kernel_row(spec: KernelSpec, X: np.ndarray, x: np.ndarray) -> np.ndarray:
    """k(x, X[t]) for every row t, computed from differences so k(x, x) == 1 exactly."""
    if spec.kind == "linear":
        return X @ x
    diff = X - x
    return np.exp(-spec.gamma * np.einsum("ij,ij->i", diff, diff))


def kernel_diag(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    if spec.kind == "linear":
        return np.einsum("ij,ij->i", X, X)
    return np.ones(X.shape[0])


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray, block: int = 2048) -> np.ndarray:
    """Gram block K[a, b] = k(A[a], B[b]), evaluated in row blocks to bound memory."""
    if spec.kind == "linear":
        return A @ B.T
    out = np.empty((A.shape[0], B.shape[0]))
    b2 = np.einsum("ij,ij->i", B, B)
    for s in range(0, A.shape[0], block):
        a = A[s:s + block]
        sq = np.einsum("ij,ij->i", a, a)[:, None] + b2[None, :] - 2.0 * (a @ B.T)
        np.maximum(sq, 0.0, out=sq)
        out[s:s + block] = np.exp(-spec.gamma * sq)
    return out
