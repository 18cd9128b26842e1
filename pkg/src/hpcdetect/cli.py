"""Command-line entry point: synth, ingest, features, train, eval, scan, report.

Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O error.
Every option may also come from a JSON file given with --config; flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .classifiers.factory import ModelConfig, fit_model
from .classifiers.model import ModelKind, decision_scores, load_model, predict, save_model
from .core import Label
from .errors import ConfigError, DataError
from .evaluation import (SBO_FEATURES, ScenarioKind, ScenarioSpec, run_sbo, run_supervised,
                         sbo_matrices)
from .features import (FeatureMatrix, read_feature_csv, run_features, sample_features,
                       write_feature_csv)
from .ranking import fisher_scores, information_gain, top_k
from .report import render_report, reports_from_json
from .static import decode_opcodes, ngram_matrix, read_elf, read_listing
from .synth import (DEFAULT_SBO_BENCHMARKS, SboInjection, SynthConfig, generate_sbo_corpus,
                    generate_traces)
from .traceio import ingest_perf_csv, read_tracesets, write_traceset

PROG = "hpcdetect"
SBO_MODELS = ("ocsvm", "lof", "iforest", "elliptic")

# per-command defaults; None means "no default" (required unless noted)
DEFAULTS = {
    "synth": {"mode": "traces", "roster": "default", "samples": 2000, "seed": None,
              "out": None, "eps": 0.01, "runs_train": 2000, "runs_test": 2000,
              "benchmarks": ",".join(DEFAULT_SBO_BENCHMARKS), "run_length": "20,60"},
    "ingest": {"perf": None, "app": None, "label": None, "run_id": None, "out": None},
    "features": {"inputs": [], "elf": [], "listing": [], "level": "sample", "label": None,
                 "ngram_dim": 1024, "ngram_n": "1,2,3", "rank": None, "top_k": None,
                 "out": None},
    "train": {"model": None, "inputs": [], "level": "sample", "params": {},
              "standardize": True, "normal_class": "benign", "seed": None, "out": None},
    "eval": {"scenario": None, "models": [], "inputs": [], "train": None, "test": None,
             "level": "sample", "columns": ",".join(SBO_FEATURES), "train_fraction": 0.8,
             "params": {}, "standardize": True, "seed": None, "out": None,
             "record_timing": False},
    "scan": {"elf": [], "listing": [], "model": None, "ngram_n": "1,2,3"},
    "report": {"inputs": [], "out": None},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _kv(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k, json.loads(v)
    except json.JSONDecodeError:
        return k, v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="HPC trace and opcode based malware detection toolkit.")
    p.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with option values (flags override it)")

    s = sub.add_parser("synth", parents=[common], help="generate synthetic trace corpora")
    s.add_argument("mode", nargs="?", choices=["traces", "sbo"], default=None,
                   help="traces: labeled roster corpus (default); sbo: train/test pair")
    s.add_argument("--roster", help="'default' or a JSON file with roster/SBO profiles")
    s.add_argument("--samples", type=int, help="samples per application (traces)")
    s.add_argument("--seed", type=int)
    s.add_argument("--eps", type=float, help="stealth epsilon of the injection (sbo)")
    s.add_argument("--runs-train", type=int, help="training runs per benchmark (sbo)")
    s.add_argument("--runs-test", type=int, help="test runs per benchmark (sbo)")
    s.add_argument("--benchmarks", help="comma-separated SBO benchmark names")
    s.add_argument("--run-length", help="min,max samples per SBO run")
    s.add_argument("-o", "--out", help="output JSONL (traces) or path prefix (sbo)")

    s = sub.add_parser("ingest", parents=[common], help="convert perf interval CSV to JSONL")
    s.add_argument("--perf", help="perf stat -I -x, output file")
    s.add_argument("--app", help="application id")
    s.add_argument("--label", choices=["benign", "malign"])
    s.add_argument("--run-id")
    s.add_argument("-o", "--out")

    s = sub.add_parser("features", parents=[common], help="extract feature CSV")
    s.add_argument("--in", dest="inputs", action="append", help="trace JSONL (repeatable)")
    s.add_argument("--elf", action="append", help="RISC-V ELF file (repeatable)")
    s.add_argument("--listing", action="append", help="disassembly listing (repeatable)")
    s.add_argument("--level", choices=["sample", "run"], help="trace feature level")
    s.add_argument("--label", choices=["benign", "malign"], help="label for static inputs")
    s.add_argument("--ngram-dim", type=int)
    s.add_argument("--ngram-n", help="comma-separated n-gram orders")
    s.add_argument("--rank", choices=["fisher", "ig"], help="keep only the top-k ranked columns")
    s.add_argument("--top-k", type=int)
    s.add_argument("-o", "--out")

    s = sub.add_parser("train", parents=[common], help="train a model")
    s.add_argument("--model", choices=[k.value for k in ModelKind])
    s.add_argument("--in", dest="inputs", action="append", help="trace JSONL or feature CSV")
    s.add_argument("--level", choices=["sample", "run"])
    s.add_argument("--param", dest="params", action="append", type=_kv, metavar="KEY=VALUE")
    s.add_argument("--no-standardize", dest="standardize", action="store_const", const=False)
    s.add_argument("--normal-class", choices=["benign", "malign"],
                   help="class a one-class model is trained on")
    s.add_argument("--seed", type=int)
    s.add_argument("-o", "--out")

    s = sub.add_parser("eval", parents=[common], help="run an evaluation scenario")
    s.add_argument("--scenario", choices=[k.value for k in ScenarioKind])
    s.add_argument("--model", dest="models", action="append",
                   choices=[k.value for k in ModelKind], help="repeatable for sbo")
    s.add_argument("--in", dest="inputs", action="append", help="labeled corpus (supervised)")
    s.add_argument("--train", help="SBO training corpus")
    s.add_argument("--test", help="SBO test corpus")
    s.add_argument("--level", choices=["sample", "run"])
    s.add_argument("--columns", help="run-feature columns used for sbo")
    s.add_argument("--train-fraction", type=float)
    s.add_argument("--param", dest="params", action="append", type=_kv, metavar="KEY=VALUE")
    s.add_argument("--no-standardize", dest="standardize", action="store_const", const=False)
    s.add_argument("--seed", type=int)
    s.add_argument("--record-timing", action="store_const", const=True,
                   help="fill wall_ms (makes reports non-reproducible)")
    s.add_argument("-o", "--out", help="report path prefix (.txt/.csv/.json)")

    s = sub.add_parser("scan", parents=[common], help="classify binaries with a trained model")
    s.add_argument("--elf", action="append")
    s.add_argument("--listing", action="append")
    s.add_argument("--model")
    s.add_argument("--ngram-n")

    s = sub.add_parser("report", parents=[common], help="re-render report JSON files")
    s.add_argument("--in", dest="inputs", action="append")
    s.add_argument("-o", "--out")
    return p


def _load_config(path: Optional[str], command: str) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    flat = {k.replace("-", "_"): v for k, v in doc.items() if k not in DEFAULTS}
    flat.update({k.replace("-", "_"): v for k, v in doc.get(command, {}).items()})
    return flat


def effective_config(args) -> dict:
    """Defaults, then the config file, then explicit flags."""
    defaults = DEFAULTS[args.command]
    cfg = _load_config(args.config, args.command)
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown {args.command} option(s) in config: {sorted(unknown)}")
    eff = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if key == "params":
            merged = dict(default)
            merged.update(cfg.get("params", {}))
            merged.update(dict(flag or []))
            eff[key] = merged
        elif flag is not None:
            eff[key] = flag
        else:
            eff[key] = cfg.get(key, default)
    return eff


def _require(eff: dict, *keys):
    for k in keys:
        if eff.get(k) in (None, [], ""):
            raise UsageError(f"--{k.replace('_', '-')} is required")


def _provenance(command: str, eff: dict) -> dict:
    return {"tool": PROG, "version": __version__, "command": command, "config": eff,
            "seed": eff.get("seed")}


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _names(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _is_traces(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().lstrip()
    return first.startswith("{")


def _load_matrix(paths, level: str) -> FeatureMatrix:
    """Feature rows from trace JSONL files or feature CSVs (not mixed)."""
    kinds = {_is_traces(p) for p in paths}
    if kinds == {True}:
        ts = read_tracesets(paths)
        return sample_features(ts) if level == "sample" else run_features(ts)
    if kinds == {False}:
        mats = [read_feature_csv(p) for p in paths]
        if len(mats) == 1:
            return mats[0]
        return _concat(mats)
    raise UsageError("cannot mix trace JSONL and feature CSV inputs")


def _concat(mats: list[FeatureMatrix]) -> FeatureMatrix:
    names = mats[0].feature_names
    if any(m.feature_names != names for m in mats):
        raise UsageError("feature CSVs have different columns")
    labeled = [m.labels is not None for m in mats]
    if any(labeled) and not all(labeled):
        raise UsageError("cannot mix labeled and unlabeled feature CSVs")
    rows = np.vstack([m.rows for m in mats])
    labels = np.concatenate([m.labels for m in mats]) if all(labeled) else None
    ids = tuple(f"{i}:{r}" for i, m in enumerate(mats) for r in m.row_ids)
    return FeatureMatrix(rows, names, ids, labels)


def _write(path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# -- commands --------------------------------------------------------------------

def cmd_synth(eff: dict) -> int:
    _require(eff, "seed")
    seed = eff["seed"]
    if eff["roster"] == "default":
        scfg = SynthConfig()
    else:
        scfg = SynthConfig.from_json(Path(eff["roster"]).read_text(encoding="utf-8"))
    prov = _provenance("synth", eff)
    if eff["mode"] == "traces":
        out = eff["out"] or "corpus.jsonl"
        ts = generate_traces(scfg.roster, int(eff["samples"]), seed)
        write_traceset(ts, out, prov)
        print(f"wrote {out}: {len(ts.runs)} runs, {ts.n_samples} samples")
        return 0
    names = _names(eff["benchmarks"])
    missing = [n for n in names if n not in scfg.sbo_profiles]
    if missing:
        raise UsageError(f"unknown SBO benchmark(s): {missing}")
    lo_hi = _ints(eff["run_length"])
    if len(lo_hi) != 2:
        raise UsageError("--run-length takes min,max")
    inj = SboInjection(float(eff["eps"]), scfg.injection.signature)
    train, test = generate_sbo_corpus(names, int(eff["runs_train"]), int(eff["runs_test"]), inj,
                                      seed, scfg.sbo_profiles, lo_hi)
    prefix = eff["out"] or "sbo"
    for part, ts in (("train", train), ("test", test)):
        path = f"{prefix}.{part}.jsonl"
        write_traceset(ts, path, prov)
        print(f"wrote {path}: {len(ts.runs)} runs, {ts.n_samples} samples")
    return 0


def cmd_ingest(eff: dict) -> int:
    _require(eff, "perf", "app", "out")
    ts = ingest_perf_csv(eff["perf"], eff["app"], Label.parse(eff["label"]), eff["run_id"])
    write_traceset(ts, eff["out"], _provenance("ingest", eff))
    print(f"wrote {eff['out']}: 1 run, {ts.n_samples} samples")
    return 0


def cmd_features(eff: dict) -> int:
    _require(eff, "out")
    static = list(eff["elf"]) + list(eff["listing"])
    if bool(eff["inputs"]) == bool(static):
        raise UsageError("give either --in trace files or --elf/--listing inputs")
    if eff["inputs"]:
        ts = read_tracesets(eff["inputs"])
        fm = sample_features(ts) if eff["level"] == "sample" else run_features(ts)
    else:
        seqs = [decode_opcodes(read_elf(p).text) for p in eff["elf"]]
        seqs += [read_listing(p) for p in eff["listing"]]
        label = Label.parse(eff["label"])
        fm = ngram_matrix(seqs, [str(p) for p in static],
                          [label] * len(seqs) if label else None,
                          n_values=_ints(eff["ngram_n"]), dim=int(eff["ngram_dim"]))
    if eff["rank"]:
        _require(eff, "top_k")
        if fm.labels is None:
            raise UsageError("ranking needs labeled rows")
        scores = (fisher_scores if eff["rank"] == "fisher" else information_gain)(fm.rows,
                                                                                 fm.labels)
        fm = fm.select_columns(sorted(top_k(scores, int(eff["top_k"]))))
    write_feature_csv(fm, eff["out"], [json.dumps(_provenance("features", eff), sort_keys=True)])
    print(f"wrote {eff['out']}: {fm.shape[0]} rows x {fm.shape[1]} features")
    return 0


def _model_config(kind, eff) -> ModelConfig:
    return ModelConfig.parse(kind, eff["params"], bool(eff["standardize"]))


def cmd_train(eff: dict) -> int:
    _require(eff, "model", "inputs", "seed", "out")
    fm = _load_matrix(eff["inputs"], eff["level"])
    cfg = _model_config(eff["model"], eff)
    normal = Label.parse(eff["normal_class"])
    if cfg.kind.one_class and fm.labels is not None:
        fm = fm.take(np.nonzero(np.asarray(fm.labels) == normal.sign)[0])
    model = fit_model(cfg, fm, seed=eff["seed"], normal_class=normal)
    model = replace(model, provenance=_provenance("train", eff))
    save_model(model, eff["out"])
    print(f"wrote {eff['out']}: {cfg.kind.value} on {len(fm)} rows")
    return 0


def cmd_eval(eff: dict) -> int:
    _require(eff, "scenario", "seed")
    seed = eff["seed"]
    scenario = ScenarioKind.parse(eff["scenario"])
    timing = bool(eff["record_timing"])
    if scenario is ScenarioKind.SBO:
        _require(eff, "train", "test")
        models = eff["models"] or list(SBO_MODELS)
        tr_paths, te_paths = [eff["train"]], [eff["test"]]
        if _is_traces(eff["train"]):
            train, test = sbo_matrices(read_tracesets(tr_paths), read_tracesets(te_paths),
                                       _names(eff["columns"]))
        else:
            train, test = _load_matrix(tr_paths, "run"), _load_matrix(te_paths, "run")
        reports = run_sbo(train, test, [_model_config(m, eff) for m in models], seed=seed,
                          record_timing=timing)
    else:
        _require(eff, "inputs", "models")
        if len(eff["models"]) != 1:
            raise UsageError("supervised scenarios take exactly one --model")
        fm = _load_matrix(eff["inputs"], eff["level"])
        spec = ScenarioSpec(scenario, float(eff["train_fraction"]), seed)
        reports = [run_supervised(fm, spec, _model_config(eff["models"][0], eff),
                                  record_timing=timing)]
    rendered = render_report(reports, _provenance("eval", eff))
    sys.stdout.write(rendered.text)
    if eff["out"]:
        _write_report(eff["out"], rendered, scenario is ScenarioKind.SBO)
    return 0


def _write_report(prefix, rendered, benchmarks: bool):
    head = rendered.csv.splitlines()[0] + "\n" if rendered.csv.startswith("#") else ""
    _write(f"{prefix}.txt", head + rendered.text)
    _write(f"{prefix}.csv", rendered.csv)
    _write(f"{prefix}.json", rendered.json)
    if benchmarks:
        _write(f"{prefix}.benchmarks.csv", rendered.benchmarks_csv)


def cmd_scan(eff: dict) -> int:
    _require(eff, "model")
    paths = list(eff["elf"]) + list(eff["listing"])
    if not paths:
        raise UsageError("give at least one --elf or --listing")
    model = load_model(eff["model"])
    seqs = [decode_opcodes(read_elf(p).text) for p in eff["elf"]]
    seqs += [read_listing(p) for p in eff["listing"]]
    fm = ngram_matrix(seqs, [str(p) for p in paths], None, n_values=_ints(eff["ngram_n"]),
                      dim=model.n_features)
    scores = decision_scores(model, fm)
    for path, lab, sc in zip(paths, predict(model, fm), scores):
        print(f"{path}\t{lab.value}\tscore={float(sc):.6g}\tthreshold={model.decision_threshold:.6g}")
    return 0


def cmd_report(eff: dict) -> int:
    _require(eff, "inputs")
    reports = []
    for p in eff["inputs"]:
        reports.extend(reports_from_json(Path(p).read_text(encoding="utf-8")))
    rendered = render_report(reports, _provenance("report", eff))
    sys.stdout.write(rendered.text)
    if eff["out"]:
        _write_report(eff["out"], rendered, any(r.scenario.startswith("sbo/") for r in reports))
    return 0


COMMANDS = {"synth": cmd_synth, "ingest": cmd_ingest, "features": cmd_features,
            "train": cmd_train, "eval": cmd_eval, "scan": cmd_scan, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        eff = effective_config(args)
        return COMMANDS[args.command](eff)
    except (UsageError, ConfigError) as exc:
        print(f"{PROG} {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, UnicodeDecodeError) as exc:
        print(f"{PROG} {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
