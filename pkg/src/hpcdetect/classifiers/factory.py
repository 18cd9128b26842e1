"""Build a TrainedModel from a kind name and hyperparameters, optionally standardizing input."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..core import Label
from ..errors import ConfigError
from ..features import FeatureMatrix, fit_standardizer
from .elliptic import elliptic_fit
from .iforest import iforest_fit
from .kernels import KernelSpec
from .lof import lof_fit
from .model import ModelKind, TrainedModel
from .svm import ocsvm_train, svm_train

_ALLOWED = {
    ModelKind.SVM: {"C", "kernel", "gamma", "tol", "max_iter"},
    ModelKind.OCSVM: {"nu", "kernel", "gamma", "tol", "max_iter"},
    ModelKind.LOF: {"k", "threshold"},
    ModelKind.IFOREST: {"n_trees", "psi", "contamination"},
    ModelKind.ELLIPTIC: {"contamination", "n_restarts"},
}


@dataclass(frozen=True)
class ModelConfig:
    kind: ModelKind
    params: dict = field(default_factory=dict)
    standardize: bool = True

    @classmethod
    def parse(cls, kind, params=None, standardize=True) -> "ModelConfig":
        try:
            kind = kind if isinstance(kind, ModelKind) else ModelKind(str(kind).lower())
        except ValueError:
            raise ConfigError(f"unknown model kind {kind!r}") from None
        params = dict(params or {})
        extra = set(params) - _ALLOWED[kind]
        if extra:
            raise ConfigError(f"{kind.value} does not take {sorted(extra)}")
        return cls(kind, params, standardize)


def _kernel(params: dict):
    kind = params.pop("kernel", "rbf")
    gamma = params.pop("gamma", None)
    return KernelSpec(kind, gamma)


def fit_model(config: ModelConfig, fm: FeatureMatrix, seed: int = 0,
              normal_class: Label = Label.BENIGN) -> TrainedModel:
    """Train ``config`` on ``fm``. One-class kinds ignore labels and model ``normal_class``.

    With ``standardize`` the column means/stdevs of ``fm`` are stored in the
    model and applied to every query before scoring.
    """
    X = fm.rows
    std = None
    if config.standardize and X.shape[0] >= 2:
        std = fit_standardizer(X)
        X = (X - std.means) / std.stdevs
    p = dict(config.params)
    names = fm.feature_names
    kind = config.kind
    if kind is ModelKind.SVM:
        if fm.labels is None:
            raise ConfigError("SVM training needs labeled rows")
        model = svm_train(X, fm.labels, C=p.pop("C", 1.0), kernel=_kernel(p), feature_names=names,
                          **p)
    elif kind is ModelKind.OCSVM:
        model = ocsvm_train(X, nu=p.pop("nu", 0.1), kernel=_kernel(p), feature_names=names,
                            normal_class=normal_class, **p)
    elif kind is ModelKind.LOF:
        model = lof_fit(X, feature_names=names, normal_class=normal_class, **p)
    elif kind is ModelKind.IFOREST:
        model = iforest_fit(X, seed=seed, feature_names=names, normal_class=normal_class, **p)
    else:
        model = elliptic_fit(X, seed=seed, feature_names=names, normal_class=normal_class, **p)
    if std is None:
        return model
    fitted = dict(model.fitted)
    fitted["input_mean"] = np.asarray(std.means)
    fitted["input_scale"] = np.asarray(std.stdevs)
    return replace(model, fitted=fitted)
