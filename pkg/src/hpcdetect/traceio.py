"""Trace ingestion (perf interval CSV) and the TraceSet JSONL format.

JSONL layout: the first line is a header record
``{"format": "hpcdetect-traces", "version": 1, "source": ..., "seed": ...}``
followed by one record per sample
``{"run_id": ..., "app_id": ..., "label": ..., "t_ms": ..., "counts": [4 ints]}``.
Samples of one run are contiguous and in time order.
"""

from __future__ import annotations

import json
import re
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Optional

import numpy as np

from .core import EVENTS, EventKind, Label, Run, Source, TraceSet
from .errors import (InvariantViolation, MalformedLine, MissingEventAtTimestamp,
                     NonMonotonicTimestamp, SchemaViolation, UnknownEvent)

FORMAT_TAG = "hpcdetect-traces"
FORMAT_VERSION = 1

_TIMESTAMP_RE = re.compile(r"^\d+\.\d{3,}$")
_NOT_COUNTED = ("<not counted>", "<not supported>")


def ingest_perf_csv(path, app_id: str, label: Optional[Label] = None,
                    run_id: Optional[str] = None) -> TraceSet:
    """Read ``perf stat -I <ms> -x,`` output into a single-run TraceSet.

    Each data line is ``timestamp,count,unit,event[,...]`` with the timestamp in
    seconds. All four monitored events must be present at every timestamp.
    Counts are taken as per-interval deltas, which is what perf prints in
    interval mode.
    """
    label = Label.parse(label)
    times: list[float] = []
    rows: list[list[int]] = []
    current_t: Optional[Decimal] = None
    current: dict[EventKind, int] = {}

    def close_group():
        missing = [e.value for e in EVENTS if e not in current]
        if missing:
            raise MissingEventAtTimestamp(float(current_t), missing)
        times.append(float(current_t * 1000))
        rows.append([current[e] for e in EVENTS])

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) < 4:
                raise MalformedLine(line_no, "expected at least 4 fields")
            ts, count, _unit, event = fields[:4]
            if not _TIMESTAMP_RE.match(ts):
                raise MalformedLine(line_no, f"bad timestamp {ts!r}")
            try:
                t = Decimal(ts)
            except InvalidOperation:
                raise MalformedLine(line_no, f"bad timestamp {ts!r}") from None
            try:
                kind = EventKind.from_alias(event)
            except KeyError:
                raise UnknownEvent(event, line_no) from None

            if current_t is None or t > current_t:
                if current_t is not None:
                    close_group()
                current_t, current = t, {}
            elif t < current_t:
                raise NonMonotonicTimestamp(line_no, float(current_t), float(t))

            if count in _NOT_COUNTED:
                raise MissingEventAtTimestamp(float(t), [kind.value])
            if kind in current:
                raise MalformedLine(line_no, f"duplicate {kind.value} at t={ts}")
            try:
                value = int(count)
            except ValueError:
                raise MalformedLine(line_no, f"bad count {count!r}") from None
            if value < 0:
                raise MalformedLine(line_no, f"negative count {value}")
            current[kind] = value

    if current_t is None:
        raise MalformedLine(0, "no data lines")
    close_group()
    try:
        run = Run(run_id or app_id, app_id, label, times, rows)
    except InvariantViolation as exc:
        raise MalformedLine(0, str(exc)) from None
    return TraceSet((run,), Source("ingested"))


def _header(ts: TraceSet, provenance: Optional[dict]) -> dict:
    head = {"format": FORMAT_TAG, "version": FORMAT_VERSION, "source": ts.source.kind}
    if ts.source.seed is not None:
        head["seed"] = ts.source.seed
    if provenance:
        head["provenance"] = provenance
    return head


def write_traceset(ts: TraceSet, path, provenance: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_header(ts, provenance), sort_keys=True) + "\n")
        for run in ts.runs:
            if len(run) == 0:
                raise InvariantViolation(f"run {run.run_id!r} has no samples; cannot serialize")
            prefix = ('{"run_id":%s,"app_id":%s,"label":%s,"t_ms":'
                      % (json.dumps(run.run_id), json.dumps(run.app_id),
                         json.dumps(run.label.value if run.label else None)))
            for t, c in zip(run.t_ms.tolist(), run.counts.tolist()):
                fh.write(f'{prefix}{t!r},"counts":[{c[0]},{c[1]},{c[2]},{c[3]}]}}\n')


def _check_sample(rec, line_no):
    if not isinstance(rec, dict):
        raise SchemaViolation(line_no, "record is not an object")
    for key in ("run_id", "app_id", "label", "t_ms", "counts"):
        if key not in rec:
            raise SchemaViolation(line_no, f"missing {key!r}")
    if not isinstance(rec["run_id"], str) or not isinstance(rec["app_id"], str):
        raise SchemaViolation(line_no, "run_id/app_id must be strings")
    counts = rec["counts"]
    if (not isinstance(counts, list) or len(counts) != 4
            or not all(isinstance(c, int) and not isinstance(c, bool) for c in counts)):
        raise SchemaViolation(line_no, "counts must be 4 integers")
    if not isinstance(rec["t_ms"], (int, float)) or isinstance(rec["t_ms"], bool):
        raise SchemaViolation(line_no, "t_ms must be a number")
    if rec["label"] not in (None, "benign", "malign"):
        raise SchemaViolation(line_no, f"bad label {rec['label']!r}")


def read_header(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    try:
        head = json.loads(first)
    except json.JSONDecodeError:
        raise SchemaViolation(1, "header is not JSON") from None
    if not isinstance(head, dict) or head.get("format") != FORMAT_TAG:
        raise SchemaViolation(1, "not a trace file header")
    return head


def read_traceset(path) -> TraceSet:
    head = read_header(path)
    if head.get("version") != FORMAT_VERSION:
        raise SchemaViolation(1, f"unsupported version {head.get('version')!r}")
    try:
        source = Source(head.get("source", "ingested"), head.get("seed"))
    except InvariantViolation as exc:
        raise SchemaViolation(1, str(exc)) from None

    runs: list[Run] = []
    finished: set[str] = set()
    cur: Optional[dict] = None

    def flush():
        try:
            runs.append(Run(cur["run_id"], cur["app_id"], cur["label"],
                            np.array(cur["t"], dtype=np.float64), cur["c"]))
        except InvariantViolation as exc:
            raise SchemaViolation(cur["line"], str(exc)) from None
        finished.add(cur["run_id"])

    with open(path, encoding="utf-8") as fh:
        fh.readline()
        for line_no, raw in enumerate(fh, start=2):
            if not raw.endswith("\n"):
                raise SchemaViolation(line_no, "truncated record")
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError:
                raise SchemaViolation(line_no, "invalid JSON") from None
            _check_sample(rec, line_no)
            rid = rec["run_id"]
            if cur is None or rid != cur["run_id"]:
                if cur is not None:
                    flush()
                if rid in finished:
                    raise SchemaViolation(line_no, f"run {rid!r} is not contiguous")
                cur = {"run_id": rid, "app_id": rec["app_id"], "label": rec["label"],
                       "t": [], "c": [], "line": line_no}
            elif rec["app_id"] != cur["app_id"] or rec["label"] != cur["label"]:
                raise SchemaViolation(line_no, f"run {rid!r} mixes app ids or labels")
            cur["t"].append(float(rec["t_ms"]))
            cur["c"].append(rec["counts"])
    if cur is not None:
        flush()
    return TraceSet(tuple(runs), source)


def read_tracesets(paths) -> TraceSet:
    """Concatenate several trace files (e.g. one ingested file per application)."""
    paths = [Path(p) for p in paths]
    merged = read_traceset(paths[0])
    for p in paths[1:]:
        merged = merged.merge(read_traceset(p))
    return merged
