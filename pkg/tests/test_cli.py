import json

import pytest

import main
from app.cli import run
from app.corpus.toy import make_toy_corpus
from app.store.artifacts import read_jsonl, read_pairs, write_jsonl
from scripts.make_toy_corpus import toy_config


def _work(tmp_path):
    return ["--work-dir", str(tmp_path / "work")]


def test_preprocess_writes_every_artifact(tmp_path, fixtures_dir, capsys):
    code = run(_work(tmp_path) + [
        "preprocess",
        "--input", str(fixtures_dir / "sample.jsonl"),
        "--split-file", str(fixtures_dir / "split.json"),
    ])
    assert code == 0
    work = tmp_path / "work"
    assert (work / "vocab.tsv").read_text(encoding="utf-8").startswith("<pad>\t0\n")
    assert [p.doc_id for p in read_pairs(work / "train.ids.jsonl")] == ["s1", "s2", "s3", "s4"]
    assert [row["id"] for row in read_jsonl(work / "test.jsonl")] == ["s6"]
    assert "=== STEP: Vocabulary ===" in capsys.readouterr().out


def test_preprocess_from_html_pages(tmp_path, fixtures_dir):
    split = tmp_path / "split.json"
    split.write_text(json.dumps({"train": ["36000001", "36000002"], "validation": [], "test": []}), encoding="utf-8")
    code = run(_work(tmp_path) + ["preprocess", "--html-dir", str(fixtures_dir / "html"), "--split-file", str(split)])
    assert code == 0
    assert len(read_pairs(tmp_path / "work" / "train.ids.jsonl")) == 2


def test_analyze_corpus_report(tmp_path, capsys):
    corpus = tmp_path / "toy.jsonl"
    write_jsonl(corpus, make_toy_corpus(100, seed=0))
    report = tmp_path / "analysis.json"
    assert run(_work(tmp_path) + ["analyze-corpus", "--input", str(corpus), "--report", str(report)]) == 0

    data = json.loads(report.read_text(encoding="utf-8"))
    assert data["stats"]["n_docs"] == 100
    assert data["lead"]["novelty"]["pct_novel"]["1"] == 0.0
    out = capsys.readouterr().out
    assert "% novel n-grams" in out
    assert "ROUGE F1 (unstemmed)" in out


def _pct_cell(values):
    return f"{sum(values) / len(values):.2f}" if values else "-"


def _sentence_count(tokens):
    ends = sum(1 for t in tokens if t in {".", "?", "!"})
    return ends + (1 if tokens and tokens[-1] not in {".", "?", "!"} else 0)


def test_analyze_corpus_command_matches_direct_counts(tmp_path, capsys, toy_docs):
    corpus = tmp_path / "toy.jsonl"
    write_jsonl(corpus, make_toy_corpus(100, seed=0))
    report = tmp_path / "analysis.json"
    assert run(_work(tmp_path) + ["analyze-corpus", "--input", str(corpus), "--report", str(report)]) == 0
    data = json.loads(report.read_text(encoding="utf-8"))
    rendered = [line.split() for line in capsys.readouterr().out.splitlines()]

    n = len(toy_docs)
    expected = {
        "avg_doc_words": sum(sum(len(s) for s in d.sentences) for d in toy_docs) / n,
        "avg_doc_sentences": sum(len(d.sentences) for d in toy_docs) / n,
        "avg_summary_words": sum(len(d.summary) for d in toy_docs) / n,
        "avg_summary_sentences": sum(_sentence_count(d.summary) for d in toy_docs) / n,
    }
    doc_vocab = len({t for d in toy_docs for s in d.sentences for t in s})
    summary_vocab = len({t for d in toy_docs for t in d.summary})
    assert data["stats"]["n_docs"] == n
    assert data["stats"]["doc_vocab"] == doc_vocab
    assert data["stats"]["summary_vocab"] == summary_vocab
    for key, value in expected.items():
        assert data["stats"][key] == pytest.approx(value, abs=5e-3)
    stats_row = [str(n)] + [f"{v:.2f}" for v in expected.values()] + [str(doc_vocab), str(summary_vocab)]
    assert stats_row in rendered

    gold_row = ["gold"]
    for order in (1, 2, 3, 4):
        values = []
        for d in toy_docs:
            grams = {tuple(d.summary[i:i + order]) for i in range(len(d.summary) - order + 1)}
            source = {tuple(d.tokens[i:i + order]) for i in range(len(d.tokens) - order + 1)}
            if grams:
                values.append(100.0 * len(grams - source) / len(grams))
        gold_row.append(_pct_cell(values))
        if values:
            assert data["gold_novelty"]["pct_novel"][str(order)] == pytest.approx(sum(values) / len(values), abs=5e-3)
    assert gold_row in rendered
    assert ["lead", "0.00", "0.00", "0.00", "0.00"] in rendered


def test_usage_errors_exit_with_one(tmp_path):
    assert run(["preprocess", "--no-such-flag"]) == 1
    assert run(_work(tmp_path) + ["preprocess"]) == 1
    assert run(["train", "--variant", "bogus"]) == 1

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"unknown_section": 1}), encoding="utf-8")
    assert run(["--config", str(bad), "topics"]) == 1


def test_data_errors_exit_with_two(tmp_path, capsys):
    assert run(_work(tmp_path) + ["preprocess", "--input", str(tmp_path / "absent.jsonl")]) == 2
    assert run(["--config", str(tmp_path / "absent.json"), "topics"]) == 2
    assert run(_work(tmp_path) + ["train"]) == 2
    assert "MissingInput" in capsys.readouterr().err


def _toy_project(tmp_path):
    """Toy corpus, a fixed split and a config trimmed to train in seconds."""
    records = make_toy_corpus(50, seed=0)
    write_jsonl(tmp_path / "toy.jsonl", records)
    ids = [r["id"] for r in records]
    split = tmp_path / "split.json"
    split.write_text(json.dumps({"train": ids[:40], "validation": ids[40:45], "test": ids[45:]}), encoding="utf-8")

    config = toy_config(tmp_path, seed=0)
    config["paths"]["split_file"] = str(split)
    config["lda"].update(iters=5, infer_iters=5)
    config["model"].update(f=16, d=16, dropout=0.0)
    config["trainer"]["max_epochs"] = 1
    config["decode"].update(beam=3, max_len=10)
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path, records[45:]


def test_full_toy_pipeline(tmp_path, capsys):
    config_path, test_records = _toy_project(tmp_path)
    work = tmp_path / "work"
    assert main.main(["pipeline", "--config", str(config_path)]) == 0
    assert (work / "checkpoints" / "ckpt-epoch1").exists()
    assert (work / "reports" / "baselines.test.json").exists()
    assert "✅ Pipeline completed." in capsys.readouterr().out

    inputs = tmp_path / "inputs.jsonl"
    write_jsonl(inputs, ({"id": r["id"], "document": r["document"]} for r in test_records))
    outputs = tmp_path / "model.jsonl"
    assert run([
        "--config", str(config_path), "summarize",
        "--ckpt", str(work / "checkpoints" / "ckpt-best"),
        "--input", str(inputs), "--output", str(outputs),
    ]) == 0
    rows = list(read_jsonl(outputs))
    assert [row["id"] for row in rows] == [r["id"] for r in test_records]
    assert all(len(row["summary"].split()) <= 10 for row in rows)

    report = tmp_path / "evaluation.json"
    assert run([
        "--config", str(config_path), "evaluate",
        "--outputs", str(outputs), "--outputs", str(work / "reports" / "lead.test.jsonl"),
        "--report", str(report),
    ]) == 0
    data = json.loads(report.read_text(encoding="utf-8"))
    assert set(data) == {"model", "lead.test"}
    assert data["lead.test"]["novelty"]["pct_novel"]["1"] == 0.0
    assert data["model"]["n_docs"] == 5

    capsys.readouterr()
    assert run(["--config", str(config_path), "topics", "-n", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6 and lines[0].startswith("T0: ")


def test_train_rejects_topic_count_mismatch(tmp_path):
    config_path, _ = _toy_project(tmp_path)
    assert run(["--config", str(config_path), "preprocess"]) == 0
    assert run(["--config", str(config_path), "train-lda"]) == 0
    assert run(["--config", str(config_path), "train", "--topics", "7"]) == 1


def test_same_config_and_seed_give_identical_artifacts(tmp_path):
    works = []
    for name in ("first", "second"):
        root = tmp_path / name
        root.mkdir()
        config_path, _ = _toy_project(root)
        assert main.main(["pipeline", "--config", str(config_path)]) == 0
        works.append(root / "work")

    artifacts = [
        "vocab.tsv",
        "train.ids.jsonl",
        "topics.lda",
        "checkpoints/ckpt-epoch1",
        "checkpoints/ckpt-best",
        "checkpoints/training_log.csv",
        "reports/random.test.jsonl",
        "reports/baselines.test.json",
    ]
    for name in artifacts:
        assert (works[0] / name).read_bytes() == (works[1] / name).read_bytes(), name
