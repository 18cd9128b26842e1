"""Elliptic envelope: robust Gaussian fit by a simplified FAST-MCD.

Each restart draws a (d+1)-subset and iterates concentration steps (refit
location and scatter on the h rows with the smallest Mahalanobis distances)
until the determinant stops changing. The minimum-determinant subset wins.
Its scatter is then rescaled for consistency at the normal model, one
reweighting pass drops rows beyond the 0.975 chi-square quantile, and the
reweighted scatter is rescaled again. Anomalies are rows whose squared
distance exceeds the (1 - contamination) chi-square quantile.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import Label
from ..errors import InvalidHyperparam, SingularCovariance, TooFewPoints
from .model import ModelKind, TrainedModel
from .special import chi2_ppf

DET_TOL = 1e-12
MAX_CSTEPS = 100
RIDGE = 1e-9
REWEIGHT_LEVEL = 0.975


@dataclass
class McdRestart:
    subset: np.ndarray
    location: np.ndarray
    covariance: np.ndarray
    determinants: list[float]   # one entry per C-step, starting at the first h-subset


def _fit_gaussian(X: np.ndarray):
    mu = X.mean(axis=0)
    diff = X - mu
    cov = diff.T @ diff / X.shape[0]
    return mu, 0.5 * (cov + cov.T)


def _precision(cov: np.ndarray):
    """Inverse via Cholesky, with one ridge retry; returns (cov_used, precision, det)."""
    d = cov.shape[0]
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        ridge = RIDGE * np.trace(cov) / d
        if not ridge > 0:
            raise SingularCovariance("covariance has zero trace") from None
        cov = cov + ridge * np.eye(d)
        try:
            L = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise SingularCovariance("covariance not positive definite after ridge") from None
    Linv = np.linalg.inv(L)
    prec = Linv.T @ Linv
    det = float(np.prod(np.diag(L)) ** 2)
    return cov, 0.5 * (prec + prec.T), det


def mahalanobis_sq(X: np.ndarray, location: np.ndarray, precision: np.ndarray) -> np.ndarray:
    diff = X - location
    return np.einsum("ij,jk,ik->i", diff, precision, diff)


def _c_steps(X: np.ndarray, h: int, start: np.ndarray) -> McdRestart:
    mu, cov = _fit_gaussian(X[start])
    cov, prec, _ = _precision(cov)
    subset = None
    dets: list[float] = []
    for _ in range(MAX_CSTEPS):
        dist = mahalanobis_sq(X, mu, prec)
        new = np.sort(np.argsort(dist, kind="stable")[:h])
        if subset is not None and np.array_equal(new, subset):
            break
        subset = new
        mu, cov = _fit_gaussian(X[subset])
        cov, prec, det = _precision(cov)
        if dets and abs(dets[-1] - det) < DET_TOL:
            dets.append(det)
            break
        dets.append(det)
    return McdRestart(subset, mu, cov, dets)


def fast_mcd(X: np.ndarray, n_restarts: int, seed: int, h: Optional[int] = None):
    """Returns (best restart, all restarts)."""
    n, d = X.shape
    h = h if h is not None else (n + d + 1) // 2
    rng = np.random.default_rng(seed)
    restarts = []
    for _ in range(n_restarts):
        start = rng.choice(n, size=d + 1, replace=False)
        restarts.append(_c_steps(X, h, start))
    best = min(range(len(restarts)), key=lambda r: (restarts[r].determinants[-1], r))
    return restarts[best], restarts


def _consistency_scale(dist: np.ndarray, d: int) -> float:
    return float(np.median(dist)) / chi2_ppf(0.5, d)


def elliptic_fit(X, contamination: float = 0.1, n_restarts: int = 10, seed: int = 0,
                 feature_names: Optional[Sequence[str]] = None,
                 normal_class: Label = Label.BENIGN) -> TrainedModel:
    from .svm import _unpack

    X, _, names = _unpack(X, None, feature_names)
    n, d = X.shape
    if n < 2 * (d + 1):
        raise TooFewPoints(f"elliptic envelope needs n >= 2(d+1) = {2 * (d + 1)}, got {n}")
    if not 0.0 < contamination < 0.5:
        raise InvalidHyperparam(f"contamination must be in (0, 0.5), got {contamination}")
    if n_restarts < 1:
        raise InvalidHyperparam("n_restarts must be >= 1")

    best, restarts = fast_mcd(X, n_restarts, seed)
    raw_loc, raw_cov = best.location, best.covariance

    _, prec, _ = _precision(raw_cov)
    dist = mahalanobis_sq(X, raw_loc, prec)
    scale = _consistency_scale(dist, d)
    if not scale > 0:
        raise SingularCovariance("degenerate robust distances")
    cov = raw_cov * scale
    _, prec, _ = _precision(cov)
    dist = mahalanobis_sq(X, raw_loc, prec)
    keep = dist <= chi2_ppf(REWEIGHT_LEVEL, d)
    if keep.sum() < d + 1:
        keep = np.ones(n, dtype=bool)
    loc, cov = _fit_gaussian(X[keep])
    cov, prec, _ = _precision(cov)
    dist = mahalanobis_sq(X, loc, prec)
    cov = cov * _consistency_scale(dist, d)
    cov = 0.5 * (cov + cov.T)
    cov, prec, det = _precision(cov)

    fitted = {
        "location": loc,
        "covariance": cov,
        "precision": prec,
        "determinant": det,
        "raw_location": raw_loc,
        "raw_covariance": raw_cov,
        "raw_determinant": float(best.determinants[-1]),
        "restart_determinants": np.array([r.determinants[-1] for r in restarts]),
        "support_size": int(best.subset.size),
    }
    hyper = {"contamination": float(contamination), "n_restarts": int(n_restarts),
             "seed": int(seed)}
    return TrainedModel(ModelKind.ELLIPTIC, hyper, fitted, chi2_ppf(1.0 - contamination, d),
                        names, normal_class=Label.parse(normal_class))


def elliptic_scores(model: TrainedModel, Q: np.ndarray) -> np.ndarray:
    """Squared Mahalanobis distance to the robust location."""
    f = model.fitted
    return mahalanobis_sq(np.asarray(Q, dtype=np.float64), f["location"], f["precision"])
