"""Train/test scenarios, confusion matrices and metrics.

Malign is the positive class throughout.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .classifiers.factory import ModelConfig, fit_model
from .classifiers.model import ModelKind, predict_signs
from .core import Label
from .errors import ConfigError, InvalidHyperparam, LabelLeak, SingleClass
from .features import RUN_FEATURES, FeatureMatrix, run_features

# Per-millisecond means only: run totals scale with the (random) run length and
# the miss ratio is a quotient of two means, which bends the benign cloud into a
# shape a single ellipsoid cannot cover.
SBO_FEATURES = tuple(n for n in RUN_FEATURES if n.startswith("mean_"))


class ScenarioKind(enum.Enum):
    BALANCED = "balanced"
    MALIGN_ONLY = "malign_only"
    BENIGN_ONLY = "benign_only"
    SBO = "sbo"

    @classmethod
    def parse(cls, value) -> "ScenarioKind":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {"malignonly": "malign_only", "benignonly": "benign_only",
                   "sbounsupervised": "sbo", "sbo_unsupervised": "sbo"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown scenario {value!r}") from None


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind.parse(self.kind))
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidHyperparam(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_signs(cls, truth, pred) -> "ConfusionMatrix":
        truth = np.asarray(truth)
        pred = np.asarray(pred)
        if truth.shape != pred.shape:
            raise ValueError("truth and prediction lengths differ")
        pos, hit = truth > 0, pred > 0
        return cls(int(np.sum(pos & hit)), int(np.sum(~pos & hit)),
                   int(np.sum(~pos & ~hit)), int(np.sum(pos & ~hit)))


def _ratio(num: int, den: int):
    return (num / den, False) if den else (0.0, True)


def compute_metrics(cm: ConfusionMatrix) -> tuple[dict, tuple[str, ...]]:
    """accuracy/precision/recall/f1/fpr; a zero denominator gives 0 and flags the metric."""
    acc, u_acc = _ratio(cm.tp + cm.tn, cm.total)
    prec, u_prec = _ratio(cm.tp, cm.tp + cm.fp)
    rec, u_rec = _ratio(cm.tp, cm.tp + cm.fn)
    f1, u_f1 = _ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn)
    fpr, u_fpr = _ratio(cm.fp, cm.fp + cm.tn)
    flags = {"accuracy": u_acc, "precision": u_prec, "recall": u_rec, "f1": u_f1, "fpr": u_fpr}
    metrics = {"accuracy": acc, "precision": prec, "recall": rec, "f1": f1, "fpr": fpr}
    return metrics, tuple(k for k, v in flags.items() if v)


@dataclass(frozen=True)
class EvalReport:
    scenario: str
    model: str
    hyperparams: dict
    cm: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    fpr: float
    seed: int
    wall_ms: float = math.nan
    undefined: tuple[str, ...] = ()
    n_train: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def fnr(self) -> float:
        """Share of malign test rows predicted benign (0 if there are none)."""
        den = self.cm.tp + self.cm.fn
        return self.cm.fn / den if den else 0.0

    @classmethod
    def build(cls, scenario, model, hyperparams, cm, seed, wall_ms=math.nan, n_train=0,
              extra=None) -> "EvalReport":
        m, undefined = compute_metrics(cm)
        return cls(scenario, model, dict(hyperparams), cm, m["accuracy"], m["precision"],
                   m["recall"], m["f1"], m["fpr"], int(seed), float(wall_ms), undefined,
                   int(n_train), dict(extra or {}))


def _counts(n: int, frac: float) -> int:
    return int(math.floor(n * frac + 0.5))


def split_scenario(X: FeatureMatrix, spec: ScenarioSpec) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Seeded per-class split. Rows keep their original relative order on both sides.

    Balanced: each class contributes round(f * n_c) training rows. MalignOnly:
    the training set is round(f * n_malign) malign rows and every benign row
    goes to test; BenignOnly is symmetric.
    """
    if X.labels is None:
        raise SingleClass("scenario split needs labels")
    labels = np.asarray(X.labels)
    idx_by = {Label.BENIGN: np.nonzero(labels < 0)[0], Label.MALIGN: np.nonzero(labels > 0)[0]}
    if len(idx_by[Label.BENIGN]) == 0 or len(idx_by[Label.MALIGN]) == 0:
        raise SingleClass("both classes must be present")
    kind = spec.kind
    if kind is ScenarioKind.SBO:
        raise ConfigError("the SBO scenario uses separate train/test corpora")
    rng = np.random.default_rng(spec.seed)
    train_parts, test_parts = [], []
    for cls in (Label.BENIGN, Label.MALIGN):
        idx = idx_by[cls]
        perm = idx[rng.permutation(len(idx))]
        trained = (kind is ScenarioKind.BALANCED
                   or (kind is ScenarioKind.MALIGN_ONLY and cls is Label.MALIGN)
                   or (kind is ScenarioKind.BENIGN_ONLY and cls is Label.BENIGN))
        k = _counts(len(idx), spec.train_fraction) if trained else 0
        train_parts.append(perm[:k])
        test_parts.append(perm[k:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    return X.take(train_idx), X.take(test_idx)


def _hyper_summary(model) -> dict:
    return {k: v for k, v in model.hyperparams.items() if not isinstance(v, np.ndarray)}


def run_supervised(X: FeatureMatrix, spec: ScenarioSpec, config: ModelConfig,
                   record_timing: bool = True) -> EvalReport:
    """Split, train, predict and score one supervised or one-class scenario."""
    kind = spec.kind
    if kind is ScenarioKind.SBO:
        raise ConfigError("use run_sbo for the SBO scenario")
    if kind is ScenarioKind.BALANCED and config.kind.one_class:
        raise ConfigError(f"balanced scenario needs a two-class model, got {config.kind.value}")
    if kind is not ScenarioKind.BALANCED and not config.kind.one_class:
        raise ConfigError(f"{kind.value} scenario needs a one-class model, got {config.kind.value}")
    train, test = split_scenario(X, spec)
    normal = Label.MALIGN if kind is ScenarioKind.MALIGN_ONLY else Label.BENIGN
    t0 = time.perf_counter()
    model = fit_model(config, train, seed=spec.seed, normal_class=normal)
    pred = predict_signs(model, test)
    wall = (time.perf_counter() - t0) * 1e3 if record_timing else math.nan
    cm = ConfusionMatrix.from_signs(test.labels, pred)
    return EvalReport.build(kind.value, config.kind.value, _hyper_summary(model), cm,
                            spec.seed, wall, len(train))


def run_sbo(train: FeatureMatrix, test: FeatureMatrix, models, seed: int = 0,
            record_timing: bool = True) -> list[EvalReport]:
    """One model per benchmark (row group), trained on benign rows, scored on that benchmark's test rows.

    Scenario names are ``sbo/<benchmark>``; without groups everything is one
    benchmark called ``all``.
    """
    if train.labels is not None and np.any(np.asarray(train.labels) > 0):
        raise LabelLeak("SBO training data contains malign rows")
    if test.labels is None:
        raise SingleClass("SBO test data must be labeled")
    configs = [m if isinstance(m, ModelConfig) else ModelConfig.parse(m) for m in models]
    for c in configs:
        if not c.kind.one_class:
            raise ConfigError(f"SBO needs one-class models, got {c.kind.value}")

    def groups_of(fm):
        return fm.groups if fm.groups is not None else ("all",) * len(fm)

    train_groups = np.array(groups_of(train), dtype=object)
    test_groups = np.array(groups_of(test), dtype=object)
    benchmarks = list(dict.fromkeys(groups_of(test)))
    reports = []
    for bench in benchmarks:
        tr = train.take(np.nonzero(train_groups == bench)[0])
        te = test.take(np.nonzero(test_groups == bench)[0])
        if len(tr) == 0:
            raise SingleClass(f"no training rows for benchmark {bench!r}")
        for cfg in configs:
            t0 = time.perf_counter()
            model = fit_model(cfg, tr, seed=seed, normal_class=Label.BENIGN)
            pred = predict_signs(model, te)
            wall = (time.perf_counter() - t0) * 1e3 if record_timing else math.nan
            cm = ConfusionMatrix.from_signs(te.labels, pred)
            reports.append(EvalReport.build(f"sbo/{bench}", cfg.kind.value, _hyper_summary(model),
                                            cm, seed, wall, len(tr)))
    return reports


def sbo_matrices(train_ts, test_ts, columns=SBO_FEATURES) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Run-level feature matrices for an SBO corpus, restricted to ``columns``."""
    tr, te = run_features(train_ts), run_features(test_ts)
    try:
        idx = [tr.feature_names.index(c) for c in columns]
    except ValueError as exc:
        raise ConfigError(f"unknown run feature: {exc}") from None
    return tr.select_columns(idx), te.select_columns(idx)


__all__ = ["ScenarioKind", "ScenarioSpec", "ConfusionMatrix", "EvalReport", "compute_metrics",
           "split_scenario", "run_supervised", "run_sbo", "sbo_matrices", "SBO_FEATURES", "ModelConfig", "ModelKind"]
