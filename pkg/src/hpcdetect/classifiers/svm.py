"""Two-class C-SVM and the nu one-class SVM, both trained by SMO."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ..core import Label
from ..errors import InvalidHyperparam, SingleClass, TooFewPoints
from ..features import FeatureMatrix
from . import smo
from .kernels import KernelSpec, kernel_matrix
from .model import ModelKind, TrainedModel


def _unpack(X, labels=None, feature_names=None):
    if isinstance(X, FeatureMatrix):
        if labels is None:
            labels = X.labels
        feature_names = feature_names or X.feature_names
        X = X.rows
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    if feature_names is None:
        feature_names = tuple(f"f{j}" for j in range(X.shape[1]))
    return X, labels, tuple(feature_names)


def _signs(labels) -> np.ndarray:
    out = []
    for v in labels:
        if isinstance(v, Label):
            out.append(v.sign)
        else:
            out.append(1 if v > 0 else -1)
    return np.array(out, dtype=np.float64)


def _kernel_params(spec: KernelSpec) -> dict:
    return {"kind": spec.kind, "gamma": spec.gamma}


def _kernel_from(fitted: dict) -> KernelSpec:
    return KernelSpec(fitted["kernel"]["kind"], fitted["kernel"]["gamma"])


def svm_train(X, labels=None, C: float = 1.0, kernel: Optional[KernelSpec] = None,
              tol: float = 1e-3, max_iter: Optional[int] = None,
              feature_names: Optional[Sequence[str]] = None) -> TrainedModel:
    """Soft-margin SVM. Labels are +1 (Malign) / -1 (Benign) or Label values.

    The bias is the midpoint of the final optimality interval, so every
    training point meets its KKT condition to within tol/2.
    """
    X, labels, names = _unpack(X, labels, feature_names)
    if labels is None:
        raise SingleClass("labels are required")
    y = _signs(labels)
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"{y.shape[0]} labels for {X.shape[0]} rows")
    if X.shape[0] < 2:
        raise TooFewPoints("need at least 2 rows")
    if not (y > 0).any() or not (y < 0).any():
        raise SingleClass("both classes must be present")
    if not C > 0:
        raise InvalidHyperparam(f"C must be > 0, got {C}")
    spec = (kernel or KernelSpec()).resolved(X)

    res = smo.solve(spec, X, y, p=-np.ones(X.shape[0]), upper=C,
                    alpha0=np.zeros(X.shape[0]), tol=tol, max_iter=max_iter)
    bias = 0.5 * (res.m_up + res.m_low)
    sv = np.nonzero(res.alpha > 0)[0]
    fitted = {
        "support_index": sv.astype(np.int64),
        "support_vectors": X[sv].copy(),
        "alpha": res.alpha[sv].copy(),
        "dual_coef": (res.alpha[sv] * y[sv]).copy(),
        "bias": float(bias),
        "kernel": _kernel_params(spec),
        "n_iter": res.n_iter,
        "n_train": int(X.shape[0]),
    }
    hyper = {"C": float(C), "kernel": spec.kind, "gamma": spec.gamma, "tol": float(tol)}
    return TrainedModel(ModelKind.SVM, hyper, fitted, 0.0, names)


def svm_decision(model: TrainedModel, Q: np.ndarray) -> np.ndarray:
    """sum_i alpha_i y_i k(x_i, q) + b; positive means Malign."""
    f = model.fitted
    K = kernel_matrix(_kernel_from(f), Q, f["support_vectors"])
    return K @ f["dual_coef"] + f["bias"]


def ocsvm_train(X, nu: float = 0.1, kernel: Optional[KernelSpec] = None,
                tol: float = 1e-3, max_iter: Optional[int] = None,
                feature_names: Optional[Sequence[str]] = None,
                normal_class: Label = Label.BENIGN) -> TrainedModel:
    """nu one-class SVM on the dual  min 1/2 a'Ka  s.t. 0 <= a_i <= 1/(nu n), sum a = 1.

    Decision f(x) = sum_i a_i k(x_i, x) - rho; f < 0 marks an anomaly.
    """
    X, _, names = _unpack(X, None, feature_names)
    n = X.shape[0]
    if not (0.0 < nu < 1.0):
        raise InvalidHyperparam(f"nu must be in (0, 1), got {nu}")
    if n < 2:
        raise TooFewPoints("need at least 2 rows")
    spec = (kernel or KernelSpec()).resolved(X)
    # solve in the scaled variables b = nu*n*a (0 <= b_i <= 1, sum b = nu*n) so the
    # stopping tolerance is independent of n; the result is mapped back exactly
    scale = nu * n
    upper = 1.0 / scale
    beta0 = np.zeros(n)
    n_full = min(int(math.floor(scale)), n)
    beta0[:n_full] = 1.0
    if n_full < n:
        beta0[n_full] = max(scale - n_full, 0.0)

    res = smo.solve(spec, X, np.ones(n), p=np.zeros(n), upper=1.0,
                    alpha0=beta0, tol=tol, max_iter=max_iter)
    rho = -0.5 * (res.m_up + res.m_low) / scale
    res.alpha = np.where(res.alpha >= 1.0, upper, res.alpha / scale)
    sv = np.nonzero(res.alpha > 0)[0]
    fitted = {
        "support_index": sv.astype(np.int64),
        "support_vectors": X[sv].copy(),
        "alpha": res.alpha[sv].copy(),
        "rho": float(rho),
        "upper": float(upper),
        "kernel": _kernel_params(spec),
        "n_iter": res.n_iter,
        "n_train": int(n),
    }
    hyper = {"nu": float(nu), "kernel": spec.kind, "gamma": spec.gamma, "tol": float(tol)}
    return TrainedModel(ModelKind.OCSVM, hyper, fitted, 0.0, names,
                        normal_class=Label.parse(normal_class))


def ocsvm_decision(model: TrainedModel, Q: np.ndarray) -> np.ndarray:
    """Raw one-class decision f(x); negative outside the learned region."""
    f = model.fitted
    K = kernel_matrix(_kernel_from(f), Q, f["support_vectors"])
    return K @ f["alpha"] - f["rho"]


def full_alpha(model: TrainedModel) -> np.ndarray:
    """Dual variables for every training row (zeros for non-support rows)."""
    a = np.zeros(model.fitted["n_train"])
    a[model.fitted["support_index"]] = model.fitted["alpha"]
    return a


def kkt_residual(model: TrainedModel, X, labels=None) -> float:
    """Largest KKT violation over the training rows, recomputed from the model.

    SVM: with r = y f(x) - 1, a = 0 needs r >= 0, a = C needs r <= 0, otherwise
    r = 0. One-class: the same with r = f(x) and bound 1/(nu n).
    """
    X, labels, _ = _unpack(X, labels)
    alpha = full_alpha(model)
    if model.kind is ModelKind.SVM:
        y = _signs(labels)
        r = y * svm_decision(model, X) - 1.0
        upper = model.hyperparams["C"]
    else:
        r = ocsvm_decision(model, X)
        upper = model.fitted["upper"]
    at_zero = alpha <= 0.0
    at_upper = alpha >= upper
    free = ~at_zero & ~at_upper
    viol = np.zeros_like(r)
    viol[at_zero] = np.maximum(-r[at_zero], 0.0)
    viol[at_upper] = np.maximum(r[at_upper], 0.0)
    viol[free] = np.abs(r[free])
    return float(viol.max()) if viol.size else 0.0
