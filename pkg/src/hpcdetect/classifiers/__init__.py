"""Supervised and one-class detectors behind a common TrainedModel facade."""

from .elliptic import elliptic_fit, elliptic_scores
from .factory import ModelConfig, fit_model
from .iforest import c_factor, iforest_fit, iforest_scores
from .kernels import KernelSpec
from .lof import lof_fit, lof_scores, lof_training_scores
from .model import (ModelKind, TrainedModel, decision_scores, dumps, is_anomaly, load_model,
                    loads, predict, predict_signs, save_model)
from .special import chi2_cdf, chi2_ppf
from .svm import kkt_residual, ocsvm_decision, ocsvm_train, svm_decision, svm_train

__all__ = [
    "KernelSpec", "ModelKind", "ModelConfig", "fit_model", "TrainedModel",
    "svm_train", "ocsvm_train", "lof_fit", "iforest_fit", "elliptic_fit",
    "svm_decision", "ocsvm_decision", "lof_scores", "lof_training_scores", "iforest_scores",
    "elliptic_scores", "decision_scores", "predict", "predict_signs", "is_anomaly",
    "kkt_residual", "c_factor", "chi2_cdf", "chi2_ppf",
    "dumps", "loads", "save_model", "load_model",
]
