import json
import random
import shutil
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nesum.annotate import load_gazetteer
from nesum.cli import EXIT_DATA, EXIT_DIVERGENCE, EXIT_OK, EXIT_USAGE, RunConfig, StageError, main, postprocess_summary, run_evaluate
from nesum.corpus import load_corpus, tokenize
from nesum.errors import ConfigurationError
from oracles import brute_ngram_overlap, char_walk_postprocess, exact_prf

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"
CORPUS = DATA / "fixture_corpus.jsonl"
GAZ = DATA / "gazetteer.tsv"


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8")


def pipeline(workdir, method="first", seed=7, *extra):
    argv = ["pipeline", "--corpus", str(CORPUS), "--gazetteer", str(GAZ), "--method", method, "--seed", str(seed), "--workdir", str(workdir)]
    return main(argv + list(extra))


# --- post-processing ------------------------------------------------------------------


class TestPostprocess:
    def test_example(self):
        assert postprocess_summary(["praha", ",", "volí", "."]) == "Praha, volí."

    def test_empty(self):
        assert postprocess_summary([]) == ""

    def test_openers_and_percent(self):
        assert postprocess_summary(["růst", "(", "o", "5", "%", ")", "„", "rekord", "“"]) == "Růst (o 5%) „rekord “"

    def test_first_letter_after_digits(self):
        assert postprocess_summary(["3", "medaile", "pro", "Česko"]) == "3 Medaile pro Česko"

    def test_against_char_walk(self):
        rng = random.Random(31)
        pool = ["praha", "brno", "volí", ".", ",", "!", "?", ";", ":", "%", "(", ")", "„", "“", "«", "»", "5", "žena"]
        for _ in range(30):
            tokens = [rng.choice(pool) for _ in range(rng.randint(0, 12))]
            assert postprocess_summary(tokens) == char_walk_postprocess(tokens)

    @given(st.lists(st.sampled_from(["a", "Bé", "č1", ".", ",", "(", "„", "%", "x"]), max_size=15))
    def test_only_first_letter_changes(self, tokens):
        out = postprocess_summary(tokens)
        original = [c for c in "".join(tokens) if c.isalnum()]
        got = [c for c in out if c.isalnum()]
        assert len(original) == len(got)
        changed = [i for i, (a, b) in enumerate(zip(original, got)) if a != b]
        assert len(changed) <= 1
        for i in changed:
            assert got[i] == original[i].upper()
            assert all(not c.isalpha() for c in original[:i])


# --- evaluate -----------------------------------------------------------------------------


def evaluate(tmp_path, summaries, **kw):
    path = tmp_path / "summaries.jsonl"
    write_jsonl(path, summaries)
    cfg = RunConfig("evaluate", corpus_path=CORPUS, gazetteer_path=GAZ, summaries_path=path, output_path=tmp_path / "r.json", per_doc_path=tmp_path / "d.jsonl", **kw)
    cfg.validate()
    return run_evaluate(cfg)


def per_doc(tmp_path):
    with open(tmp_path / "d.jsonl", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


class TestEvaluate:
    def test_identity_summaries(self, tmp_path):
        docs = list(load_corpus(CORPUS))
        gaz = load_gazetteer(GAZ)
        report, _ = evaluate(tmp_path, [{"doc_id": d.doc_id, "summary": d.headline, "method": "oracle"} for d in docs])
        for key in ("rouge1", "rougeL"):
            assert report.as_dict()[key] == {"p": 1.0, "r": 1.0, "f": 1.0}
        headlines = {d.doc_id: d.headline for d in docs}
        for row in per_doc(tmp_path):
            has_entity = any(str(t) != "O" for t in gaz.annotate(tokenize(headlines[row["doc_id"]])))
            assert row["rougeNE"]["f"] == (1.0 if has_entity else 0.0)
            n_tokens = len(tokenize(headlines[row["doc_id"]]))
            assert row["rouge2"]["f"] == (1.0 if n_tokens > 1 else 0.0)
        # some fixture headlines have no entities at all
        assert {row["rougeNE"]["f"] for row in per_doc(tmp_path)} == {0.0, 1.0}

    def test_empty_summaries(self, tmp_path):
        docs = list(load_corpus(CORPUS))
        report, _ = evaluate(tmp_path, [{"doc_id": d.doc_id, "summary": "", "method": "empty"} for d in docs])
        assert report.values() == [0.0] * 12

    def test_unknown_doc_is_listed(self, tmp_path):
        doc = next(iter(load_corpus(CORPUS)))
        report, result = evaluate(tmp_path, [{"doc_id": "nope", "summary": "x"}, {"doc_id": doc.doc_id, "summary": doc.headline}])
        assert result["errors"] == [{"doc_id": "nope", "error": "document not found in corpus"}]
        assert result["documents"] == 1 and report.rouge1.f == 1.0

    def test_json_shape(self, tmp_path):
        doc = next(iter(load_corpus(CORPUS)))
        evaluate(tmp_path, [{"doc_id": doc.doc_id, "summary": doc.headline, "method": "m"}])
        data = json.loads((tmp_path / "r.json").read_text())
        assert set(data) == {"method", "documents", "paper_literal_ne", "report", "errors"}
        assert set(data["report"]) == {"rouge1", "rouge2", "rougeL", "rougeNE"}

    def test_paper_literal_flag_swaps_ne(self, tmp_path):
        docs = list(load_corpus(CORPUS))
        summaries = [{"doc_id": d.doc_id, "summary": d.text[:80]} for d in docs]
        default, _ = evaluate(tmp_path, summaries)
        literal, _ = evaluate(tmp_path, summaries, metric_flags={"paper_literal_ne": True})
        assert literal.rougeNE.precision == pytest.approx(default.rougeNE.recall, abs=1e-12)
        assert literal.rouge1 == default.rouge1


# --- golden files and the pipeline --------------------------------------------------------------


@pytest.mark.parametrize("method", ["first", "ned"])
def test_pipeline_matches_golden(tmp_path, method):
    assert pipeline(tmp_path, method) == EXIT_OK
    for name in ("report.json", "report.txt", "per_doc.jsonl", "summaries.jsonl"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / method / name).read_bytes(), name


@pytest.mark.parametrize("method", ["first", "ned"])
def test_golden_per_doc_scores_against_oracle(method):
    headlines = {d.doc_id: d.headline for d in load_corpus(CORPUS)}
    with open(GOLDEN / method / "summaries.jsonl", encoding="utf-8") as fh:
        summaries = {r["doc_id"]: r["summary"] for r in map(json.loads, fh)}
    with open(GOLDEN / method / "per_doc.jsonl", encoding="utf-8") as fh:
        for row in map(json.loads, fh):
            ref, cand = tokenize(headlines[row["doc_id"]]), tokenize(summaries[row["doc_id"]])
            for n, key in ((1, "rouge1"), (2, "rouge2")):
                exact = exact_prf(*brute_ngram_overlap(ref, cand, n))
                assert [row[key]["p"], row[key]["r"], row[key]["f"]] == pytest.approx([float(x) for x in exact], abs=1e-12)


def test_first_vs_ned_delta():
    recorded = json.loads((GOLDEN / "first_vs_ned.json").read_text())
    first = json.loads((GOLDEN / "first" / "report.json").read_text())["report"]["rouge1"]["f"]
    ned = json.loads((GOLDEN / "ned" / "report.json").read_text())["report"]["rouge1"]["f"]
    assert ned - first == pytest.approx(recorded["ned_minus_first_rouge1_f"], abs=1e-12)
    assert recorded["ned_minus_first_rouge1_f"] > 0
    with open(GOLDEN / "first" / "summaries.jsonl") as a, open(GOLDEN / "ned" / "summaries.jsonl") as b:
        differ = sum(x["chosen_sentence"] != y["chosen_sentence"] for x, y in zip(map(json.loads, a), map(json.loads, b)))
    assert differ == recorded["ned_differs_from_first"]


def test_pipeline_repeatable(tmp_path):
    for method in ("random", "textrank"):
        assert pipeline(tmp_path / f"{method}1", method) == EXIT_OK
        assert pipeline(tmp_path / f"{method}2", method) == EXIT_OK
        for name in ("report.json", "summaries.jsonl"):
            assert (tmp_path / f"{method}1" / name).read_bytes() == (tmp_path / f"{method}2" / name).read_bytes()


def test_random_seed_changes_choice(tmp_path):
    pipeline(tmp_path / "a", "random", 1)
    pipeline(tmp_path / "b", "random", 2)
    assert (tmp_path / "a" / "summaries.jsonl").read_bytes() != (tmp_path / "b" / "summaries.jsonl").read_bytes()


# --- commands and exit codes ---------------------------------------------------------------------


def test_summarize_ned_without_annotations(tmp_path, capsys):
    rc = main(["summarize", "--corpus", str(CORPUS), "--method", "ned", "--out", str(tmp_path / "s.jsonl")])
    assert rc == EXIT_DATA
    assert "stage annotate" in capsys.readouterr().err


def test_pipeline_stage_failure_names_stage(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("Praha\tQ\n", encoding="utf-8")
    cfg = RunConfig("pipeline", corpus_path=CORPUS, gazetteer_path=bad, output_path=tmp_path / "w", method="first")
    cfg.validate()
    from nesum.cli import run_pipeline_end_to_end

    with pytest.raises(StageError) as info:
        run_pipeline_end_to_end(cfg)
    assert info.value.stage == "annotate"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["summarize", "--bogus"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EXIT_USAGE


def test_missing_required_path(tmp_path, capsys):
    assert main(["annotate", "--corpus", str(CORPUS), "--out", str(tmp_path / "a")]) == EXIT_DATA
    assert "--gazetteer" in capsys.readouterr().err
    assert main(["evaluate", "--corpus", str(tmp_path / "missing.jsonl"), "--gazetteer", str(GAZ), "--summaries", str(GAZ)]) == EXIT_DATA


def test_validate_rejects_unknown_method():
    with pytest.raises(ConfigurationError):
        RunConfig("summarize", corpus_path=CORPUS, output_path=Path("x"), method="lead3").validate()


def annotate(tmp_path):
    out = tmp_path / "ann.jsonl"
    assert main(["annotate", "--corpus", str(CORPUS), "--gazetteer", str(GAZ), "--out", str(out)]) == EXIT_OK
    return out


def test_stats(tmp_path, capsys):
    ann = annotate(tmp_path)
    capsys.readouterr()
    assert main(["stats", "--corpus", str(CORPUS), "--annotations", str(ann), "--fields", "headline"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Named entities in headline" in out and "Without entity" in out
    assert main(["stats", "--corpus", str(CORPUS), "--annotations", str(ann), "--split", "dev", "--fields", "headline"]) == EXIT_OK
    row = [line for line in capsys.readouterr().out.splitlines() if line.startswith("Without entity")][0]
    assert row.split()[-1] == "n/a"


def test_stats_counts_match_direct_annotation(tmp_path, capsys):
    ann = annotate(tmp_path)
    from nesum.cli import run_stats

    cfg = RunConfig("stats", corpus_path=CORPUS, annotations_path=ann, fields=("headline",))
    cfg.validate()
    stats = run_stats(cfg)["headline"]
    gaz = load_gazetteer(GAZ)
    expected_total = {s: 0 for s in stats}
    without = {s: 0 for s in stats}
    for doc in load_corpus(CORPUS):
        tags = [str(t) for t in gaz.annotate(tokenize(doc.headline))]
        begins = sum(t.startswith("B-") for t in tags)
        expected_total[doc.split] += begins
        without[doc.split] += begins == 0
    for split, st_ in stats.items():
        assert st_.total == expected_total[split]
        assert st_.docs_without_entity == without[split]


def test_train_and_seq2seq_summarize(tmp_path):
    ann = annotate(tmp_path)
    cfg_path = tmp_path / "model.json"
    cfg_path.write_text(json.dumps({"embed_dim": 8, "hidden_dim": 8, "energy_dim": 4, "max_epochs": 2, "batch_size": 8, "max_tgt_len": 8, "ner_feature_dim": 17}))
    ckpt = tmp_path / "m.npz"
    log = tmp_path / "log.csv"
    argv = ["train", "--corpus", str(CORPUS), "--annotations", str(ann), "--config", str(cfg_path), "--out", str(ckpt), "--log", str(log)]
    assert main(argv) == EXIT_OK
    assert log.read_text().startswith("epoch,train_loss,dev_loss,wall_seconds")
    out = tmp_path / "s.jsonl"
    argv = ["summarize", "--corpus", str(CORPUS), "--annotations", str(ann), "--method", "seq2seq-ner", "--ckpt", str(ckpt), "--out", str(out), "--split", "test"]
    assert main(argv) == EXIT_OK
    rows = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    assert len(rows) == 5 and all(r["method"] == "seq2seq_ner" and r["chosen_sentence"] is None for r in rows)
    assert all("<unk>" not in r["summary"] for r in rows)
    # a NER checkpoint cannot serve the plain method
    argv[argv.index("seq2seq-ner")] = "seq2seq"
    assert main(argv) == EXIT_DATA


def test_train_divergence_exit_code(tmp_path):
    cfg_path = tmp_path / "model.json"
    cfg_path.write_text(json.dumps({"embed_dim": 4, "hidden_dim": 4, "energy_dim": 2, "max_epochs": 3, "learning_rate": 1e300, "max_tgt_len": 8}))
    argv = ["train", "--corpus", str(CORPUS), "--config", str(cfg_path), "--out", str(tmp_path / "m.npz")]
    assert main(argv) == EXIT_DIVERGENCE


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("nesum")
    cmd = [exe] if exe else [sys.executable, "-m", "nesum.cli"]
    proc = subprocess.run(cmd + ["summarize", "--nope"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
