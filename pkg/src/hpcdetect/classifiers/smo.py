"""Sequential minimal optimization for box- and equality-constrained kernel QPs.

Solves

    min_a  1/2 a'Qa + p'a   s.t.  y'a = const,  0 <= a_i <= upper,

with Q_ij = y_i y_j K_ij and y_i in {-1, +1}. The working pair is the
maximal-violating index i plus the second-order choice of j (Fan, Chen & Lin,
JMLR 2005). Kernel rows are computed on demand and kept in an LRU cache.
The equality value is set by the starting point.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..errors import NoConvergence
from .kernels import KernelSpec, kernel_diag, kernel_row

TAU = 1e-12


@dataclass
class SmoResult:
    alpha: np.ndarray
    grad: np.ndarray
    m_up: float     # max over the "can move up" set of -y*G
    m_low: float    # min over the "can move down" set of -y*G
    n_iter: int


class _RowCache:
    def __init__(self, spec: KernelSpec, X: np.ndarray, cache_mb: float):
        self.spec, self.X = spec, X
        self.capacity = max(2, int(cache_mb * 1e6 / (8 * max(X.shape[0], 1))))
        self.rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def __call__(self, i: int) -> np.ndarray:
        row = self.rows.get(i)
        if row is not None:
            self.rows.move_to_end(i)
            return row
        row = kernel_row(self.spec, self.X, self.X[i])
        self.rows[i] = row
        if len(self.rows) > self.capacity:
            self.rows.popitem(last=False)
        return row


def solve(spec: KernelSpec, X: np.ndarray, y: np.ndarray, p: np.ndarray, upper: float,
          alpha0: np.ndarray, tol: float = 1e-3, max_iter: int | None = None,
          cache_mb: float = 256.0) -> SmoResult:
    n = X.shape[0]
    y = y.astype(np.float64)
    alpha = alpha0.astype(np.float64).copy()
    kdiag = kernel_diag(spec, X)
    krow = _RowCache(spec, X, cache_mb)
    if max_iter is None:
        max_iter = max(100_000, 100 * n)

    grad = p.astype(np.float64).copy()
    for t in np.nonzero(alpha)[0]:
        grad += alpha[t] * y[t] * y * krow(int(t))

    n_iter = 0
    while True:
        at_up = alpha >= upper
        at_low = alpha <= 0.0
        up = np.where(y > 0, ~at_up, ~at_low)
        low = np.where(y > 0, ~at_low, ~at_up)
        minus_yg = -y * grad
        if not up.any() or not low.any():
            m_up = float(minus_yg[up].max()) if up.any() else -np.inf
            m_low = float(minus_yg[low].min()) if low.any() else np.inf
            break
        cand = np.where(up, minus_yg, -np.inf)
        i = int(np.argmax(cand))
        m_up = float(cand[i])
        m_low = float(np.where(low, minus_yg, np.inf).min())
        if m_up - m_low < tol:
            break
        if n_iter >= max_iter:
            raise NoConvergence(n_iter, "SMO")
        n_iter += 1

        k_i = krow(i)
        b = m_up - minus_yg
        a = kdiag[i] + kdiag - 2.0 * k_i
        a = np.where(a > 0, a, TAU)
        score = np.where(low & (b > 0), -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        k_j = krow(j)

        yi, yj = y[i], y[j]
        q_ij = yi * yj * k_i[j]
        ai_old, aj_old = alpha[i], alpha[j]
        c = upper
        if yi != yj:
            quad = kdiag[i] + kdiag[j] + 2.0 * q_ij
            quad = quad if quad > 0 else TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > c:
                    ai, aj = c, c - diff
            elif aj > c:
                aj, ai = c, c + diff
        else:
            quad = kdiag[i] + kdiag[j] - 2.0 * q_ij
            quad = quad if quad > 0 else TAU
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > c:
                if ai > c:
                    ai, aj = c, total - c
            elif aj < 0:
                aj, ai = 0.0, total
            if total > c:
                if aj > c:
                    aj, ai = c, total - c
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        d_i, d_j = ai - ai_old, aj - aj_old
        grad += (yi * d_i) * y * k_i + (yj * d_j) * y * k_j

    return SmoResult(alpha, grad, m_up, m_low, n_iter)
