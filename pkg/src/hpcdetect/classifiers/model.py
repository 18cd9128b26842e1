"""TrainedModel, the uniform predict/score facade, and JSON serialization."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..core import Label
from ..errors import DimensionMismatch, SchemaViolation
from ..features import FeatureMatrix

FORMAT_VERSION = 1


class ModelKind(enum.Enum):
    SVM = "svm"
    OCSVM = "ocsvm"
    LOF = "lof"
    IFOREST = "iforest"
    ELLIPTIC = "elliptic"

    @property
    def one_class(self) -> bool:
        return self is not ModelKind.SVM


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """Fitted classifier state.

    ``fitted`` maps names to numpy arrays or plain scalars. One-class models
    record in ``normal_class`` which class they were trained on; anomalies are
    predicted as the other class.
    """

    kind: ModelKind
    hyperparams: dict
    fitted: dict
    decision_threshold: float
    feature_names: tuple[str, ...]
    normal_class: Optional[Label] = None
    provenance: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def _as_query(model: TrainedModel, Q) -> np.ndarray:
    if isinstance(Q, FeatureMatrix):
        Q = Q.rows
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim == 1:
        Q = Q.reshape(0, model.n_features) if Q.size == 0 else Q.reshape(1, -1)
    if Q.ndim != 2 or Q.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, query has shape {Q.shape}")
    return Q


def decision_scores(model: TrainedModel, Q) -> np.ndarray:
    """Scores oriented so that larger means more anomalous (or more Malign for SVM)."""
    from . import elliptic, iforest, lof, svm  # local: these modules import model

    Q = _as_query(model, Q)
    if Q.shape[0] == 0:
        return np.zeros(0)
    if "input_mean" in model.fitted:
        Q = (Q - model.fitted["input_mean"]) / model.fitted["input_scale"]
    if model.kind is ModelKind.SVM:
        return svm.svm_decision(model, Q)
    if model.kind is ModelKind.OCSVM:
        return -svm.ocsvm_decision(model, Q)
    if model.kind is ModelKind.LOF:
        return lof.lof_scores(model, Q)
    if model.kind is ModelKind.IFOREST:
        return iforest.iforest_scores(model, Q)
    return elliptic.elliptic_scores(model, Q)


def is_anomaly(model: TrainedModel, Q) -> np.ndarray:
    """Boolean flags: score strictly above the model's threshold."""
    return decision_scores(model, Q) > model.decision_threshold


def predict(model: TrainedModel, Q) -> list[Label]:
    flags = is_anomaly(model, Q)
    if model.kind is ModelKind.SVM:
        return [Label.MALIGN if f else Label.BENIGN for f in flags]
    normal = model.normal_class or Label.BENIGN
    return [normal.other() if f else normal for f in flags]


def predict_signs(model: TrainedModel, Q) -> np.ndarray:
    return np.array([lab.sign for lab in predict(model, Q)], dtype=np.int8)


# -- serialization -------------------------------------------------------------

def _encode(v):
    if isinstance(v, np.ndarray):
        return {"__ndarray__": v.tolist(), "dtype": str(v.dtype), "shape": list(v.shape)}
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _encode(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_encode(x) for x in v]
    return v


def _decode(v):
    if isinstance(v, dict):
        if "__ndarray__" in v:
            return np.array(v["__ndarray__"], dtype=v["dtype"]).reshape(v["shape"])
        return {k: _decode(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_decode(x) for x in v]
    return v


def model_to_dict(model: TrainedModel) -> dict[str, Any]:
    d = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind.value,
        "hyperparams": _encode(model.hyperparams),
        "fitted": _encode(model.fitted),
        "threshold": float(model.decision_threshold),
        "feature_names": list(model.feature_names),
        "normal_class": model.normal_class.value if model.normal_class else None,
    }
    if model.provenance:
        d["provenance"] = model.provenance
    return d


def model_from_dict(d: dict) -> TrainedModel:
    try:
        if d["format_version"] != FORMAT_VERSION:
            raise SchemaViolation(0, f"unsupported model format {d['format_version']!r}")
        return TrainedModel(
            kind=ModelKind(d["kind"]),
            hyperparams=_decode(d["hyperparams"]),
            fitted=_decode(d["fitted"]),
            decision_threshold=float(d["threshold"]),
            feature_names=tuple(d["feature_names"]),
            normal_class=Label.parse(d.get("normal_class")),
            provenance=d.get("provenance", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(0, f"bad model document: {exc}") from None


def dumps(model: TrainedModel) -> str:
    # json emits floats via repr, which round-trips float64 exactly
    return json.dumps(model_to_dict(model), sort_keys=True, allow_nan=False)


def loads(text: str) -> TrainedModel:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(0, f"model is not JSON: {exc}") from None
    if not isinstance(d, dict):
        raise SchemaViolation(0, "model document must be an object")
    return model_from_dict(d)


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model) + "\n")


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
