"""Render evaluation reports as ASCII tables, CSV and JSON, and read them back."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import SchemaViolation
from .evaluation import ConfusionMatrix, EvalReport, compute_metrics

CSV_COLUMNS = ("scenario", "model", "accuracy", "precision", "recall", "f1", "fpr",
               "tp", "fp", "tn", "fn", "seed", "wall_ms")
METRICS = ("accuracy", "precision", "recall", "f1", "fpr")
REPORT_FORMAT = "hpcdetect-report"
REPORT_VERSION = 1


def _num(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def confusion_text(r: EvalReport) -> str:
    """Fixed-width 2x2 matrix, actual classes as rows, plus the metric line."""
    cm = r.cm
    w = max(6, len(str(max(cm.tp, cm.fp, cm.tn, cm.fn))))
    lines = [
        f"scenario={r.scenario} model={r.model} seed={r.seed}",
        f"{'':15}{'predicted':>{2 * w + 2}}",
        f"{'':15}{'malign':>{w}}  {'benign':>{w}}",
        f"{'actual malign':15}{cm.tp:>{w}}  {cm.fn:>{w}}",
        f"{'actual benign':15}{cm.fp:>{w}}  {cm.tn:>{w}}",
        f"total={cm.total} " + " ".join(f"{m}={getattr(r, m):.4f}" for m in METRICS),
    ]
    if r.undefined:
        lines.append("undefined (reported as 0): " + ",".join(r.undefined))
    return "\n".join(lines) + "\n"


def render_text(reports: Sequence[EvalReport]) -> str:
    return "\n".join(confusion_text(r) for r in reports)


def _csv_text(rows, header, provenance_lines=()) -> str:
    buf = io.StringIO()
    for line in provenance_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_csv(reports: Sequence[EvalReport], provenance_lines: Sequence[str] = ()) -> str:
    rows = []
    for r in reports:
        cm = r.cm
        rows.append([r.scenario, r.model] + [_num(getattr(r, m)) for m in METRICS]
                    + [cm.tp, cm.fp, cm.tn, cm.fn, r.seed, _num(r.wall_ms)])
    return _csv_text(rows, CSV_COLUMNS, provenance_lines)


def report_to_dict(r: EvalReport) -> dict:
    d = {"scenario": r.scenario, "model": r.model, "hyperparams": r.hyperparams}
    d.update({m: getattr(r, m) for m in METRICS})
    d.update(tp=r.cm.tp, fp=r.cm.fp, tn=r.cm.tn, fn=r.cm.fn, seed=r.seed,
             wall_ms=None if math.isnan(r.wall_ms) else r.wall_ms,
             undefined=list(r.undefined), n_train=r.n_train)
    return d


def render_json(reports: Sequence[EvalReport], provenance: Optional[dict] = None) -> str:
    doc = {"format": REPORT_FORMAT, "version": REPORT_VERSION,
           "reports": [report_to_dict(r) for r in reports]}
    if provenance is not None:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def render_benchmark_csv(reports: Sequence[EvalReport],
                         provenance_lines: Sequence[str] = ()) -> str:
    """Accuracy per SBO benchmark (rows) and model (columns), ready for a grouped bar plot."""
    sbo = [r for r in reports if r.scenario.startswith("sbo/")]
    benches = list(dict.fromkeys(r.scenario[4:] for r in sbo))
    models = list(dict.fromkeys(r.model for r in sbo))
    acc = {(r.scenario[4:], r.model): r.accuracy for r in sbo}
    rows = [[b] + [_num(acc[(b, m)]) if (b, m) in acc else "" for m in models] for b in benches]
    return _csv_text(rows, ["benchmark"] + models, provenance_lines)


@dataclass(frozen=True)
class Rendered:
    text: str
    csv: str
    json: str
    benchmarks_csv: str


def render_report(reports: Sequence[EvalReport], provenance: Optional[dict] = None) -> Rendered:
    lines = ()
    if provenance is not None:
        lines = (json.dumps(provenance, sort_keys=True),)
    return Rendered(render_text(reports), render_csv(reports, lines),
                    render_json(reports, provenance), render_benchmark_csv(reports, lines))


# -- readers ------------------------------------------------------------------------

def _report(scenario, model, hyperparams, tp, fp, tn, fn, seed, wall_ms, undefined=(),
            n_train=0, metrics=None) -> EvalReport:
    cm = ConfusionMatrix(int(tp), int(fp), int(tn), int(fn))
    base = EvalReport.build(scenario, model, hyperparams, cm, seed,
                            math.nan if wall_ms is None else wall_ms, n_train)
    if metrics is None:
        return base
    # keep the stored values so a round trip is exact even if they were edited
    return EvalReport(base.scenario, base.model, base.hyperparams, cm,
                      *(float(metrics[m]) for m in METRICS), base.seed, base.wall_ms,
                      tuple(undefined), base.n_train)


def reports_from_json(text: str) -> list[EvalReport]:
    try:
        doc = json.loads(text)
        if doc.get("format") != REPORT_FORMAT:
            raise SchemaViolation(0, "not a report document")
        return [_report(d["scenario"], d["model"], d.get("hyperparams", {}), d["tp"], d["fp"],
                        d["tn"], d["fn"], d["seed"], d.get("wall_ms"), d.get("undefined", ()),
                        d.get("n_train", 0), {m: d[m] for m in METRICS})
                for d in doc["reports"]]
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise SchemaViolation(0, f"bad report JSON: {exc}") from None


def reports_from_csv(text: str) -> list[EvalReport]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise SchemaViolation(1, f"report CSV header must be {','.join(CSV_COLUMNS)}")
    out = []
    for k, rec in enumerate(reader, start=2):
        try:
            metrics = {m: float(rec[m]) for m in METRICS}
            wall = float(rec["wall_ms"]) if rec["wall_ms"] else None
            r = _report(rec["scenario"], rec["model"], {}, rec["tp"], rec["fp"], rec["tn"],
                        rec["fn"], int(rec["seed"]), wall, metrics=metrics)
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(k, f"bad report row: {exc}") from None
        _, undefined = compute_metrics(r.cm)
        out.append(EvalReport(r.scenario, r.model, r.hyperparams, r.cm, r.accuracy, r.precision,
                              r.recall, r.f1, r.fpr, r.seed, r.wall_ms, undefined))
    return out

