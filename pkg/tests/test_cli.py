import json
from pathlib import Path

import pytest

from hpcdetect.cli import main
from hpcdetect.traceio import read_traceset

FIXTURES = Path(__file__).parent / "fixtures"

LISTING_A = ("  1000:\t13 05 00 00 \taddi a0,a0,0\n"
             "  1004:\t83 35 05 00 \tld a1,0(a0)\n"
             "  1008:\t23 30 b5 00 \tsd a1,0(a0)\n"
             "  100c:\t67 80 00 00 \tret\n")
LISTING_B = ("  2000:\t33 05 b5 02 \tmul a0,a0,a1\n"
             "  2004:\t33 45 b5 02 \tdiv a0,a0,a1\n"
             "  2008:\t63 04 05 00 \tbeqz a0,2010\n"
             "  200c:\t6f 00 00 00 \tj 200c\n")


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    assert main(["synth", "--samples", "150", "--seed", "5", "-o", str(path)]) == 0
    return path


def test_synth_writes_expected_size(corpus):
    ts = read_traceset(corpus)
    assert len(ts.runs) == 14
    assert ts.n_samples == 14 * 150


def test_missing_seed_is_usage_error(tmp_path, capsys):
    assert main(["synth", "--samples", "10", "-o", str(tmp_path / "x.jsonl")]) == 1
    err = capsys.readouterr().err
    assert "--seed" in err and len(err.strip().splitlines()) == 1


def test_bad_flag_is_usage_error(capsys):
    assert main(["eval", "--scenario", "nope", "--seed", "1"]) == 1


def test_nonexistent_input_exit_2(tmp_path, capsys):
    code = main(["eval", "--scenario", "balanced", "--model", "svm", "--seed", "1",
                 "--in", str(tmp_path / "missing.jsonl")])
    assert code == 2
    assert len(capsys.readouterr().err.strip().splitlines()) == 1


def test_malformed_input_exit_2(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json\n")
    assert main(["features", "--in", str(bad), "-o", str(tmp_path / "f.csv")]) == 2


def test_eval_is_deterministic(corpus, tmp_path, capsys):
    args = ["eval", "--scenario", "balanced", "--model", "svm", "--in", str(corpus),
            "--seed", "42", "-o", str(tmp_path / "rep")]
    assert main(args) == 0
    first = {ext: (tmp_path / f"rep.{ext}").read_bytes() for ext in ("txt", "csv", "json")}
    out = capsys.readouterr().out
    assert "actual malign" in out and "accuracy=" in out
    assert main(args) == 0
    for ext, blob in first.items():
        assert (tmp_path / f"rep.{ext}").read_bytes() == blob
    doc = json.loads(first["json"])
    assert doc["reports"][0]["accuracy"] >= 0.9
    assert doc["reports"][0]["wall_ms"] is None


def test_config_file_and_flag_override(corpus, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 3, "eval": {"scenario": "balanced", "models": ["svm"],
                                                   "train_fraction": 0.5}}))
    assert main(["eval", "--config", str(cfg), "--in", str(corpus), "-o",
                 str(tmp_path / "a")]) == 0
    rep = json.loads((tmp_path / "a.json").read_text())
    assert rep["provenance"]["seed"] == 3
    assert rep["reports"][0]["n_train"] == 1050
    assert main(["eval", "--config", str(cfg), "--in", str(corpus), "--seed", "4",
                 "--train-fraction", "0.8", "-o", str(tmp_path / "b")]) == 0
    rep = json.loads((tmp_path / "b.json").read_text())
    assert rep["provenance"]["seed"] == 4
    assert rep["reports"][0]["n_train"] == 1680
    cfg.write_text(json.dumps({"eval": {"bogus": 1}}))
    assert main(["eval", "--config", str(cfg), "--seed", "1"]) == 1


def test_train_one_class_and_report(corpus, tmp_path, capsys):
    model = tmp_path / "m.json"
    assert main(["train", "--model", "iforest", "--in", str(corpus), "--seed", "2",
                 "--param", "n_trees=20", "-o", str(model)]) == 0
    doc = json.loads(model.read_text())
    assert doc["kind"] == "iforest"
    assert main(["train", "--model", "iforest", "--in", str(corpus), "--seed", "2",
                 "--param", "depth=3", "-o", str(model)]) == 1
    assert main(["eval", "--scenario", "benign_only", "--model", "ocsvm", "--in", str(corpus),
                 "--seed", "2", "-o", str(tmp_path / "r")]) == 0
    capsys.readouterr()
    assert main(["report", "--in", str(tmp_path / "r.json"), "-o", str(tmp_path / "again")]) == 0
    assert "scenario=benign_only model=ocsvm" in capsys.readouterr().out
    assert (tmp_path / "again.csv").exists()


def test_synth_sbo_pair(tmp_path):
    prefix = tmp_path / "sbo"
    assert main(["synth", "sbo", "--eps", "0.01", "--seed", "7", "--runs-train", "20",
                 "--runs-test", "8", "-o", str(prefix)]) == 0
    train = read_traceset(f"{prefix}.train.jsonl")
    test = read_traceset(f"{prefix}.test.jsonl")
    assert all(r.label.sign < 0 for r in train.runs)
    signs = [r.label.sign for r in test.runs]
    assert signs.count(1) == signs.count(-1) == 16
    assert main(["eval", "--scenario", "sbo", "--model", "elliptic", "--model", "iforest",
                 "--train", f"{prefix}.train.jsonl", "--test", f"{prefix}.test.jsonl",
                 "--seed", "7", "-o", str(tmp_path / "rep")]) == 0
    bench = (tmp_path / "rep.benchmarks.csv").read_text().splitlines()
    assert bench[1] == "benchmark,elliptic,iforest"
    assert len(bench) == 2 + 4


def test_static_features_train_and_scan(tmp_path, capsys):
    a, b = tmp_path / "a.lst", tmp_path / "b.lst"
    a.write_text(LISTING_A)
    b.write_text(LISTING_B)
    for lab, src in (("benign", a), ("malign", b)):
        assert main(["features", "--listing", str(src), "--listing", str(src), "--label", lab,
                     "--ngram-dim", "64", "-o", str(tmp_path / f"{lab}.csv")]) == 0
    model = tmp_path / "static.json"
    assert main(["train", "--model", "svm", "--in", str(tmp_path / "benign.csv"),
                 "--in", str(tmp_path / "malign.csv"), "--param", "kernel=\"linear\"",
                 "--seed", "0", "-o", str(model)]) == 0
    capsys.readouterr()
    assert main(["scan", "--model", str(model), "--listing", str(a), "--listing", str(b),
                 "--elf", str(FIXTURES / "fixture.elf")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    verdict = {ln.split("\t")[0]: ln.split("\t")[1] for ln in lines}
    assert verdict[str(a)] == "benign"
    assert verdict[str(b)] == "malign"
    assert verdict[str(FIXTURES / "fixture.elf")] in ("benign", "malign")
    assert main(["scan", "--model", str(model), "--elf", str(a)]) == 2
