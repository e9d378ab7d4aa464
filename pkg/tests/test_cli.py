import hashlib
import json
import math

import numpy as np
import pytest

from ordinal_sim.bucketing import load_scheme
from ordinal_sim.cli import main
from ordinal_sim.metrics import read_report


def run(*argv):
    return main([str(a) for a in argv])


def digest(paths):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in paths}


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert run("synth", "--out-dir", d, "--n-pairs", 3000, "--seed", 2) == 0
    return d


def write_config(path, **kw):
    cfg = dict(hidden=[16, 8], dropout=[0.1, 0.1], kind="atmsel", max_epochs=6, patience=3,
               batch_size=64, seed=1, scheme_path="scheme.json", train_path="data/train.tsv",
               val_path="data/val.tsv", embeddings_path="data/embeddings.txt")
    cfg.update(kw)
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def workdir(tmp_path, synth_dir):
    (tmp_path / "data").mkdir()
    for name in ("embeddings.txt", "train.tsv", "val.tsv", "test.tsv"):
        (tmp_path / "data" / name).write_bytes((synth_dir / name).read_bytes())
    return tmp_path


def test_buckets_paper(tmp_path, capsys):
    assert run("buckets", "--paper", "--out", tmp_path / "s.json") == 0
    assert load_scheme(tmp_path / "s.json").boundaries == (0.0, 0.82, 0.90, 0.95, 0.97, 1.0)


def test_buckets_quantile_counts(workdir, capsys):
    assert run("buckets", "--input", workdir / "data/train.tsv", "--k", 5, "--out", workdir / "s.json") == 0
    counts = [int(c) for c in capsys.readouterr().out.split("counts")[1].split()]
    assert len(counts) == 5 and sum(counts) == 1800
    assert max(counts) - min(counts) <= 1
    assert load_scheme(workdir / "s.json").K == 5


def test_buckets_usage_and_degenerate(tmp_path):
    data = tmp_path / "d.tsv"
    data.write_text("a\tb\t0.5\nc\td\t0.5\ne\tf\t1.0\n")
    assert run("buckets", "--input", data, "--k", 1, "--out", tmp_path / "s.json") == 1
    assert run("buckets", "--input", data, "--k", 3, "--out", tmp_path / "s.json") == 2
    assert run("buckets", "--out", tmp_path / "s.json") == 1
    assert not (tmp_path / "s.json").exists()


def test_synth_split_sizes_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("synth", "--out-dir", a, "--n-pairs", 10_000, "--seed", 9) == 0
    assert run("synth", "--out-dir", b, "--n-pairs", 10_000, "--seed", 9) == 0
    lines = {}
    for split, n in (("train", 6000), ("val", 2000), ("test", 2000)):
        lines[split] = (a / f"{split}.tsv").read_text().splitlines()
        assert len(lines[split]) == n
    assert digest(sorted(a.iterdir())) == digest(sorted(b.iterdir()))
    tr, va, te = (set(lines[s]) for s in ("train", "val", "test"))
    assert not (tr & va) and not (tr & te) and not (va & te)


def test_synth_rejects_bad_config(tmp_path):
    assert run("synth", "--out-dir", tmp_path / "x", "--skew", 2.0) == 1
    assert not (tmp_path / "x").exists()


def test_full_pipeline(workdir, capsys):
    inputs = sorted((workdir / "data").iterdir())
    before = digest(inputs)
    assert run("buckets", "--input", workdir / "data/train.tsv", "--k", 5, "--out", workdir / "scheme.json") == 0
    cfg = write_config(workdir / "cfg.json")
    assert run("train", "--config", cfg, "--checkpoint", workdir / "ck.json", "--log", workdir / "log.tsv") == 0
    assert run("eval", "--checkpoint", workdir / "ck.json", "--dataset", workdir / "data/test.tsv",
               "--embeddings", workdir / "data/embeddings.txt", "--out", workdir / "report.txt") == 0
    out = capsys.readouterr().out
    report = read_report(workdir / "report.txt")
    assert math.isfinite(report.male) and report.n == 600
    assert f"MALE {report.male:.17g}" in out
    assert digest(inputs) == before
    log_lines = (workdir / "log.tsv").read_text().splitlines()
    assert log_lines[-1].startswith("# best_epoch=")


def test_train_seed_override_changes_checkpoint(workdir):
    run("buckets", "--paper", "--out", workdir / "scheme.json")
    cfg = write_config(workdir / "cfg.json", max_epochs=2)
    assert run("train", "--config", cfg, "--checkpoint", workdir / "a.json", "--log", workdir / "a.log") == 0
    assert run("train", "--config", cfg, "--checkpoint", workdir / "b.json", "--log", workdir / "b.log",
               "--seed", 5) == 0
    assert (workdir / "a.json").read_bytes() != (workdir / "b.json").read_bytes()


def test_eval_scheme_mismatch(workdir, capsys):
    run("buckets", "--paper", "--out", workdir / "scheme.json")
    cfg = write_config(workdir / "cfg.json", max_epochs=1)
    run("train", "--config", cfg, "--checkpoint", workdir / "ck.json", "--log", workdir / "log.tsv")
    run("buckets", "--input", workdir / "data/train.tsv", "--k", 3, "--out", workdir / "k3.json")
    code = run("eval", "--checkpoint", workdir / "ck.json", "--dataset", workdir / "data/test.tsv",
               "--embeddings", workdir / "data/embeddings.txt", "--scheme", workdir / "k3.json",
               "--out", workdir / "r.txt")
    assert code == 1
    assert "K=3" in capsys.readouterr().err
    assert not (workdir / "r.txt").exists()


def test_train_failure_leaves_no_artifacts(workdir):
    run("buckets", "--paper", "--out", workdir / "scheme.json")
    (workdir / "data/bad.tsv").write_text("a\tb\t0.5\nc\td\t7\n")
    cfg = write_config(workdir / "cfg.json", val_path="data/bad.tsv")
    assert run("train", "--config", cfg, "--checkpoint", workdir / "ck.json", "--log", workdir / "l.tsv") == 2
    assert not (workdir / "ck.json").exists() and not (workdir / "l.tsv").exists()
    assert not list(workdir.glob(".*.tmp"))


def test_train_config_errors(workdir):
    cfg = write_config(workdir / "cfg.json", kind="ranknet")
    assert run("train", "--config", cfg, "--checkpoint", workdir / "ck.json", "--log", workdir / "l") == 1
    (workdir / "cfg.json").write_text('{"hidden": [4], "bogus": 1}')
    assert run("train", "--config", cfg, "--checkpoint", workdir / "ck.json", "--log", workdir / "l") == 1


def test_predict_pair_literal(workdir, capsys):
    run("buckets", "--paper", "--out", workdir / "scheme.json")
    cfg = write_config(workdir / "cfg.json", max_epochs=1)
    run("train", "--config", cfg, "--checkpoint", workdir / "ck.json", "--log", workdir / "log.tsv")
    capsys.readouterr()
    code = run("predict", "--checkpoint", workdir / "ck.json", "--embeddings", workdir / "data/embeddings.txt",
               "--pair", "w001 w002 w003", "w001 w002", "--pair", "usb-c to lightning cable w005",
               "usbc to lightning w004")
    assert code == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
    assert rows[0] == ["q1", "q2", "yhat", "label"]
    assert len(rows) == 3
    for row in rows[1:]:
        assert len(row) == 4
        assert math.isfinite(float(row[2]))
        assert 0 <= int(row[3]) < 5


def test_predict_dataset_without_y(workdir):
    run("buckets", "--paper", "--out", workdir / "scheme.json")
    cfg = write_config(workdir / "cfg.json", max_epochs=1, kind="coral")
    run("train", "--config", cfg, "--checkpoint", workdir / "ck.json", "--log", workdir / "log.tsv")
    (workdir / "q.tsv").write_text("w001 w002\tw002 w003\n")
    assert run("predict", "--checkpoint", workdir / "ck.json", "--embeddings", workdir / "data/embeddings.txt",
               "--dataset", workdir / "q.tsv", "--out", workdir / "p.tsv") == 0
    _, row = (workdir / "p.tsv").read_text().splitlines()
    yhat, label = row.split("\t")[2:]
    assert float(yhat) in (0.41, 0.86, 0.925, 0.96, 0.985)
    assert run("predict", "--checkpoint", workdir / "ck.json", "--embeddings",
               workdir / "data/embeddings.txt") == 1


def test_help_documents_flags(capsys):
    for cmd in ("buckets", "synth", "train", "eval", "predict"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        assert "--" in capsys.readouterr().out


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_missing_file_is_data_error(tmp_path):
    assert run("buckets", "--input", tmp_path / "nope.tsv", "--k", 3, "--out", tmp_path / "s.json") == 2
