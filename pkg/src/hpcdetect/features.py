"""Feature matrices built from trace sets, z-score standardization and CSV export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import BI, BM, EVENT_NAMES, Label, TraceSet
from .errors import EmptyMatrix, InvariantViolation, SchemaViolation

SAMPLE_FEATURES = EVENT_NAMES + ("branch_miss_ratio",)
RUN_FEATURES = (tuple(f"total_{e}" for e in EVENT_NAMES)
                + tuple(f"mean_{e}" for e in EVENT_NAMES)
                + ("branch_miss_ratio",))

DEGENERATE_STD = 1e-12


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """n x d float matrix with row ids and optional labels.

    ``labels`` holds class signs (+1 Malign, -1 Benign). ``groups`` carries the
    application id of each row so per-benchmark evaluation can split on it.
    """

    rows: np.ndarray
    feature_names: tuple[str, ...]
    row_ids: tuple[str, ...]
    labels: Optional[np.ndarray] = None
    groups: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim == 1 and rows.size == 0:
            rows = rows.reshape(0, len(self.feature_names))
        if rows.ndim != 2:
            raise InvariantViolation(f"rows must be 2-D, got shape {rows.shape}")
        if not np.isfinite(rows).all():
            raise InvariantViolation("feature matrix contains NaN or infinite entries")
        n, d = rows.shape
        names = tuple(self.feature_names)
        ids = tuple(self.row_ids)
        if len(names) != d:
            raise InvariantViolation(f"{len(names)} feature names for {d} columns")
        if len(ids) != n:
            raise InvariantViolation(f"{len(ids)} row ids for {n} rows")
        labels = self.labels
        if labels is not None:
            labels = np.array(labels, dtype=np.int8).reshape(-1)
            if labels.shape[0] != n:
                raise InvariantViolation(f"{labels.shape[0]} labels for {n} rows")
            if not np.isin(labels, (-1, 1)).all():
                raise InvariantViolation("labels must be +1 (malign) or -1 (benign)")
            labels.flags.writeable = False
        groups = self.groups
        if groups is not None:
            groups = tuple(groups)
            if len(groups) != n:
                raise InvariantViolation(f"{len(groups)} group ids for {n} rows")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", ids)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "groups", groups)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape

    def __len__(self) -> int:
        return self.rows.shape[0]

    def take(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureMatrix(
            self.rows[idx], self.feature_names, tuple(self.row_ids[i] for i in idx),
            None if self.labels is None else self.labels[idx],
            None if self.groups is None else tuple(self.groups[i] for i in idx))

    def with_rows(self, rows, feature_names: Optional[Sequence[str]] = None) -> "FeatureMatrix":
        return FeatureMatrix(rows, tuple(feature_names or self.feature_names), self.row_ids,
                             self.labels, self.groups)

    def select_columns(self, cols: Sequence[int]) -> "FeatureMatrix":
        cols = list(cols)
        return self.with_rows(self.rows[:, cols], [self.feature_names[c] for c in cols])

    def class_labels(self) -> list[Optional[Label]]:
        if self.labels is None:
            return [None] * len(self)
        return [Label.from_sign(int(s)) for s in self.labels]

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        same_labels = ((self.labels is None and other.labels is None)
                       or (self.labels is not None and other.labels is not None
                           and np.array_equal(self.labels, other.labels)))
        return (self.feature_names == other.feature_names and self.row_ids == other.row_ids
                and np.array_equal(self.rows, other.rows) and same_labels
                and self.groups == other.groups)


def _label_vector(ts: TraceSet, lengths):
    if any(r.label is None for r in ts.runs):
        if all(r.label is None for r in ts.runs):
            return None
        raise InvariantViolation("trace set is partially labeled")
    return np.repeat([r.label.sign for r in ts.runs], lengths).astype(np.int8)


def _miss_ratio(bi, bm):
    return bm / np.maximum(bi, 1)


def sample_features(ts: TraceSet) -> FeatureMatrix:
    """One row per sample: the four counts plus branch_miss_ratio."""
    for r in ts.runs:
        if len(r) == 0:
            raise InvariantViolation(f"run {r.run_id!r} is empty")
    if not ts.runs:
        return FeatureMatrix(np.zeros((0, 5)), SAMPLE_FEATURES, ())
    counts = np.concatenate([r.counts for r in ts.runs]).astype(np.float64)
    ratio = _miss_ratio(counts[:, BI], counts[:, BM])
    rows = np.column_stack([counts, ratio])
    lengths = [len(r) for r in ts.runs]
    ids = tuple(f"{r.run_id}@{i}" for r in ts.runs for i in range(len(r)))
    groups = tuple(a for r in ts.runs for a in [r.app_id] * len(r))
    return FeatureMatrix(rows, SAMPLE_FEATURES, ids, _label_vector(ts, lengths), groups)


def run_features(ts: TraceSet) -> FeatureMatrix:
    """One row per run: per-event totals, per-ms means, and the overall miss ratio."""
    rows = []
    for r in ts.runs:
        if len(r) == 0:
            raise InvariantViolation(f"run {r.run_id!r} is empty")
        totals = r.counts.sum(axis=0).astype(np.float64)
        means = totals / r.duration_ms
        rows.append(np.concatenate([totals, means, [_miss_ratio(totals[BI], totals[BM])]]))
    mat = np.array(rows, dtype=np.float64).reshape(len(rows), len(RUN_FEATURES))
    return FeatureMatrix(mat, RUN_FEATURES, tuple(r.run_id for r in ts.runs),
                         _label_vector(ts, [1] * len(ts.runs)),
                         tuple(r.app_id for r in ts.runs))


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stdevs: np.ndarray

    def transform(self, X):
        return apply_standardizer(self, X)


def fit_standardizer(X) -> Standardizer:
    """Column means and population stdevs; near-constant columns get divisor 1."""
    rows = X.rows if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise EmptyMatrix(f"need at least 2 rows to standardize, got shape {rows.shape}")
    mu = rows.mean(axis=0)
    sd = rows.std(axis=0)
    sd = np.where(sd < DEGENERATE_STD, 1.0, sd)
    return Standardizer(mu, sd)


def apply_standardizer(s: Standardizer, X):
    if isinstance(X, FeatureMatrix):
        return X.with_rows((X.rows - s.means) / s.stdevs)
    return (np.asarray(X, dtype=np.float64) - s.means) / s.stdevs


# -- CSV ------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, ".17g")


def feature_csv(fm: FeatureMatrix, provenance_lines: Sequence[str] = ()) -> str:
    """CSV text: header = feature names + "label"; floats at 17 significant digits."""
    buf = io.StringIO()
    for line in provenance_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(fm.feature_names) + ["label"])
    labels = fm.class_labels()
    for row, lab in zip(fm.rows.tolist(), labels):
        w.writerow([_fmt(v) for v in row] + [lab.value if lab else ""])
    return buf.getvalue()


def write_feature_csv(fm: FeatureMatrix, path, provenance_lines: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(feature_csv(fm, provenance_lines))


def read_feature_csv(path) -> FeatureMatrix:
    """Inverse of write_feature_csv. Row ids are synthesized as ``row<k>``."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaViolation(1, "empty feature CSV") from None
    if not header or header[-1] != "label":
        raise SchemaViolation(1, "last column must be 'label'")
    names = tuple(header[:-1])
    rows, labels = [], []
    for k, rec in enumerate(reader, start=2):
        if len(rec) != len(header):
            raise SchemaViolation(k, f"expected {len(header)} fields")
        try:
            rows.append([float(v) for v in rec[:-1]])
        except ValueError:
            raise SchemaViolation(k, "non-numeric feature value") from None
        labels.append(rec[-1])
    if any(labels) and not all(labels):
        raise SchemaViolation(0, "partially labeled feature CSV")
    signs = None
    if labels and all(labels):
        try:
            signs = np.array([Label.parse(v).sign for v in labels], dtype=np.int8)
        except InvariantViolation as exc:
            raise SchemaViolation(0, str(exc)) from None
    mat = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return FeatureMatrix(mat, names, tuple(f"row{k}" for k in range(len(rows))), signs)
