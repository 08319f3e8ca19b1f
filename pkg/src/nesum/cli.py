"""Command-line interface: annotate, summarize, evaluate, train, stats and pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
Set ``NESUM_LOG_LEVEL`` (e.g. ``DEBUG``) for more logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .annotate import load_gazetteer
from .corpus import FIELDS, SPLITS, AnnotatedText, EntityType, annotation_record, attach_annotations, load_annotations, load_corpus, tokenize
from .errors import AlignmentError, ConfigurationError, CorpusLineError, DivergenceError
from .extractive import EXTRACTIVE_METHODS, summarize
from .metrics import METRIC_KEYS, MetricReport, aggregate, evaluate_pair

logger = logging.getLogger("nesum")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGENCE = 0, 1, 2, 3

METHODS = EXTRACTIVE_METHODS + ("seq2seq", "seq2seq-ner")
NO_SPACE_BEFORE = frozenset(".,!?;:%)")
NO_SPACE_AFTER = frozenset(["(", "„", "«"])


# --- output post-processing --------------------------------------------------------


def detokenize(tokens: Sequence[str]) -> str:
    """Join tokens with single spaces, dropping spaces before closing punctuation and after openers."""
    parts = []
    for i, tok in enumerate(tokens):
        if i > 0 and tok not in NO_SPACE_BEFORE and tokens[i - 1] not in NO_SPACE_AFTER:
            parts.append(" ")
        parts.append(tok)
    return "".join(parts).strip()


def postprocess_summary(tokens: Sequence[str]) -> str:
    """Detokenize and uppercase the first alphabetic character."""
    text = detokenize(tokens)
    for i, ch in enumerate(text):
        if ch.isalpha():
            return text[:i] + ch.upper() + text[i + 1 :]
    return text


# --- run configuration -------------------------------------------------------------


REQUIRED = {
    "annotate": ("corpus_path", "gazetteer_path", "output_path"),
    "summarize": ("corpus_path", "output_path"),
    "evaluate": ("corpus_path", "summaries_path", "gazetteer_path"),
    "train": ("corpus_path", "model_config_path", "output_path"),
    "stats": ("corpus_path", "annotations_path"),
    "pipeline": ("corpus_path", "gazetteer_path", "output_path"),
}


@dataclass
class RunConfig:
    command: str
    corpus_path: Path | None = None
    annotations_path: Path | None = None
    gazetteer_path: Path | None = None
    summaries_path: Path | None = None
    method: str | None = None
    seed: int = 0
    output_path: Path | None = None
    table_path: Path | None = None
    per_doc_path: Path | None = None
    model_config_path: Path | None = None
    ckpt_path: Path | None = None
    log_path: Path | None = None
    split: str | None = None
    fields: tuple[str, ...] = FIELDS
    min_sentence_len: int = 1
    vocab_size: int = 25_000
    metric_flags: dict = field(default_factory=lambda: {"paper_literal_ne": False})

    def validate(self) -> None:
        for name in REQUIRED[self.command]:
            if getattr(self, name) is None:
                raise ConfigurationError(f"{self.command}: --{name.replace('_path', '').replace('_', '-')} is required")
        for name in ("corpus_path", "annotations_path", "gazetteer_path", "summaries_path", "model_config_path", "ckpt_path"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigurationError(f"{self.command}: {name.replace('_path', '')} file {path} does not exist")
        if self.method is not None:
            self.method = self.method.replace("_", "-")
            if self.method not in METHODS:
                raise ConfigurationError(f"unknown method {self.method!r}")
        if self.command in ("summarize", "pipeline"):
            if self.method is None:
                raise ConfigurationError(f"{self.command}: --method is required")
            if self.method in ("seq2seq", "seq2seq-ner") and self.ckpt_path is None:
                raise ConfigurationError(f"{self.method} needs --ckpt")
        if self.command == "summarize" and self.method in ("ned", "seq2seq-ner") and self.annotations_path is None:
            raise StageError("annotate", f"method {self.method} needs entity annotations (--annotations); run the annotate stage first")


class StageError(ConfigurationError):
    def __init__(self, stage, message):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


def _write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    yield json.loads(line)
                except ValueError as exc:
                    raise CorpusLineError(lineno, f"{path}: {exc}") from exc


# --- commands --------------------------------------------------------------------


def run_annotate(cfg: RunConfig) -> int:
    gazetteer = load_gazetteer(cfg.gazetteer_path)
    records = []
    for doc in load_corpus(cfg.corpus_path, cfg.split):
        for name in cfg.fields:
            tokens = tokenize(doc.get(name))
            records.append(annotation_record(doc.doc_id, name, tokens, gazetteer.annotate(tokens)))
    records.sort(key=lambda r: (r["doc_id"], FIELDS.index(r["field"])))
    _write_jsonl(cfg.output_path, records)
    logger.info("annotated %d fields", len(records))
    return EXIT_OK


def _text_annotation(doc, annotations) -> AnnotatedText:
    tokens = tokenize(doc.text)
    if annotations is None:
        return AnnotatedText.from_tokens(tokens)
    rec = annotations.get((doc.doc_id, "text"))
    if rec is None:
        raise StageError("annotate", f"no text annotations for document {doc.doc_id}")
    return attach_annotations(tokens, rec)


def run_summarize(cfg: RunConfig) -> int:
    annotations = load_annotations(cfg.annotations_path) if cfg.annotations_path else None
    outputs = []
    if cfg.method in EXTRACTIVE_METHODS:
        for doc in load_corpus(cfg.corpus_path, cfg.split):
            a = _text_annotation(doc, annotations)
            out = summarize(cfg.method, a, doc.doc_id, cfg.seed, cfg.min_sentence_len)
            outputs.append(
                {
                    "doc_id": doc.doc_id,
                    "method": out.method,
                    "summary": detokenize(out.summary_tokens),
                    "chosen_sentence": out.chosen_sentence,
                    "seed": out.seed,
                }
            )
    else:
        from .seq2seq import greedy_decode, load_checkpoint

        params, vocab = load_checkpoint(cfg.ckpt_path)
        config = params.config
        if (cfg.method == "seq2seq-ner") != config.use_ner:
            raise ConfigurationError(f"checkpoint {cfg.ckpt_path} does not match method {cfg.method}")
        for doc in load_corpus(cfg.corpus_path, cfg.split):
            a = _text_annotation(doc, annotations if config.use_ner else None)
            tokens = a.tokens[: config.max_src_len - 1]
            tags = a.tags[: config.max_src_len - 1] if config.use_ner else None
            decoded = greedy_decode(params, config, vocab, tokens, tags)
            outputs.append(
                {
                    "doc_id": doc.doc_id,
                    "method": cfg.method.replace("-", "_"),
                    "summary": postprocess_summary(decoded),
                    "chosen_sentence": None,
                    "seed": cfg.seed,
                }
            )
    outputs.sort(key=lambda r: r["doc_id"])
    _write_jsonl(cfg.output_path, outputs)
    return EXIT_OK


def format_table(rows: Sequence[tuple[str, MetricReport]]) -> str:
    """Fixed-width table: P, R, F (scaled by 100, one decimal) for each metric."""
    titles = ["ROUGE_RAW-1", "ROUGE_RAW-2", "ROUGE_RAW-L", "ROUGE_NE"]
    width = max([len("Method")] + [len(name) for name, _ in rows])
    head1 = "Method".ljust(width) + "".join(f" | {t:^17}" for t in titles)
    head2 = " " * width + "".join(" |     P     R     F" for _ in titles)
    lines = [head1, head2, "-" * len(head1)]
    for name, rep in rows:
        vals = rep.values()
        cells = [" ".join(f"{100 * v:5.1f}" for v in vals[3 * k : 3 * k + 3]) for k in range(4)]
        lines.append(name.ljust(width) + "".join(f" | {c}" for c in cells))
    return "\n".join(lines) + "\n"


def run_evaluate(cfg: RunConfig) -> tuple[MetricReport | None, dict]:
    gazetteer = load_gazetteer(cfg.gazetteer_path)
    headlines = {doc.doc_id: doc.headline for doc in load_corpus(cfg.corpus_path, cfg.split)}
    per_doc = []
    errors = []
    methods = set()
    for rec in _read_jsonl(cfg.summaries_path):
        doc_id = rec.get("doc_id")
        if doc_id not in headlines:
            errors.append({"doc_id": doc_id, "error": "document not found in corpus"})
            continue
        methods.add(rec.get("method"))
        ref = tokenize(headlines[doc_id])
        cand = tokenize(rec.get("summary") or "")
        report = evaluate_pair(ref, cand, gazetteer.annotate(ref), gazetteer.annotate(cand), cfg.metric_flags["paper_literal_ne"])
        per_doc.append({"doc_id": doc_id, **report.as_dict()})
    per_doc.sort(key=lambda r: r["doc_id"])
    errors.sort(key=lambda e: str(e["doc_id"]))
    overall = aggregate(MetricReport.from_dict(r) for r in per_doc) if per_doc else None
    method = cfg.method or (",".join(sorted(m for m in methods if m)) or "summaries")
    result = {
        "method": method,
        "documents": len(per_doc),
        "paper_literal_ne": cfg.metric_flags["paper_literal_ne"],
        "report": overall.as_dict() if overall else None,
        "errors": errors,
    }
    table = format_table([(method, overall)]) if overall else "no documents evaluated\n"
    if errors:
        table += "\nErrors:\n" + "".join(f"  {e['doc_id']}: {e['error']}\n" for e in errors)
    if cfg.output_path:
        Path(cfg.output_path).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if cfg.table_path:
        Path(cfg.table_path).write_text(table, encoding="utf-8")
    if cfg.per_doc_path:
        _write_jsonl(cfg.per_doc_path, per_doc)
    sys.stdout.write(table)
    return overall, result


def run_stats(cfg: RunConfig) -> dict:
    from .corpus import EntityStats

    annotations = load_annotations(cfg.annotations_path)
    per_field = {name: {split: EntityStats() for split in SPLITS} for name in cfg.fields}
    for doc in load_corpus(cfg.corpus_path, cfg.split):
        for name in cfg.fields:
            rec = annotations.get((doc.doc_id, name))
            if rec is None:
                raise ConfigurationError(f"stats: no {name!r} annotations for document {doc.doc_id}")
            per_field[name][doc.split].add(attach_annotations(tokenize(doc.get(name)), rec).tags)
    out = []
    for name in cfg.fields:
        out.append(f"Named entities in {name}")
        out.append(f"{'Type':22}" + "".join(f"{s:>10}" for s in SPLITS))
        for etype in EntityType:
            out.append(f"{etype.name:22}" + "".join(f"{per_field[name][s].counts[etype]:>10}" for s in SPLITS))
        out.append(f"{'Total':22}" + "".join(f"{per_field[name][s].total:>10}" for s in SPLITS))
        pct = []
        for s in SPLITS:
            frac = per_field[name][s].fraction_without_entity
            pct.append("n/a" if frac is None else f"{100 * frac:.1f}%")
        out.append(f"{'Without entity':22}" + "".join(f"{p:>10}" for p in pct))
        out.append("")
    sys.stdout.write("\n".join(out))
    return per_field


def run_train(cfg: RunConfig) -> int:
    from .seq2seq import ModelConfig, build_vocab, init_params, make_example, save_checkpoint, train

    with open(cfg.model_config_path, encoding="utf-8") as fh:
        config = ModelConfig.from_dict(json.load(fh))
    annotations = load_annotations(cfg.annotations_path) if cfg.annotations_path else None
    if config.use_ner and annotations is None:
        raise StageError("annotate", "a NER model needs --annotations")
    data = {"train": [], "dev": []}
    for doc in load_corpus(cfg.corpus_path):
        if doc.split in data:
            a = _text_annotation(doc, annotations if config.use_ner else None)
            data[doc.split].append((a.tokens[: config.max_src_len - 1], a.tags[: config.max_src_len - 1], tokenize(doc.headline)))
    if not data["train"] or not data["dev"]:
        raise ConfigurationError("train: corpus needs documents in both the train and dev splits")
    vocab = build_vocab((t for src, _, tgt in data["train"] for t in src + tgt), cfg.vocab_size)

    def examples(split):
        return [make_example(vocab, src, tgt, tags if config.use_ner else None) for src, tags, tgt in data[split]]

    params = init_params(config, len(vocab))
    best, log = train(params, config, examples("train"), examples("dev"))
    save_checkpoint(cfg.output_path, best, vocab)
    if cfg.log_path:
        log.write_csv(cfg.log_path)
    logger.info("best epoch %d of %d", log.best_epoch, len(log.records))
    return EXIT_OK


def run_pipeline_end_to_end(cfg: RunConfig) -> int:
    """annotate -> summarize -> evaluate, coupled only through files in ``output_path``."""
    workdir = Path(cfg.output_path)
    workdir.mkdir(parents=True, exist_ok=True)
    ann = workdir / "annotations.jsonl"
    summaries = workdir / "summaries.jsonl"
    stages = [
        ("annotate", lambda: run_annotate(_replace(cfg, command="annotate", output_path=ann))),
        ("summarize", lambda: run_summarize(_replace(cfg, command="summarize", annotations_path=ann, output_path=summaries))),
        (
            "evaluate",
            lambda: run_evaluate(
                _replace(
                    cfg,
                    command="evaluate",
                    summaries_path=summaries,
                    output_path=workdir / "report.json",
                    table_path=workdir / "report.txt",
                    per_doc_path=workdir / "per_doc.jsonl",
                )
            ),
        ),
    ]
    for name, stage in stages:
        try:
            stage()
        except StageError:
            raise
        except (ConfigurationError, AlignmentError, CorpusLineError, OSError, ValueError) as exc:
            raise StageError(name, str(exc)) from exc
    return EXIT_OK


def _replace(cfg: RunConfig, **changes) -> RunConfig:
    from dataclasses import replace

    new = replace(cfg, **changes)
    new.validate()
    return new


# --- argument parsing ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nesum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *names):
        if "corpus" in names:
            p.add_argument("--corpus", type=Path, help="corpus JSONL")
        if "annotations" in names:
            p.add_argument("--annotations", type=Path, help="annotation JSONL")
        if "gazetteer" in names:
            p.add_argument("--gazetteer", type=Path, help="gazetteer TSV used as the annotator")
        if "split" in names:
            p.add_argument("--split", choices=SPLITS)

    p = sub.add_parser("annotate", help="tag corpus fields with the gazetteer annotator")
    common(p, "corpus", "gazetteer", "split")
    p.add_argument("--out", type=Path)
    p.add_argument("--fields", nargs="+", choices=FIELDS, default=list(FIELDS))

    p = sub.add_parser("summarize", help="produce one summary per document")
    common(p, "corpus", "annotations", "split")
    p.add_argument("--method", choices=METHODS + ("seq2seq_ner",))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ckpt", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--min-sentence-len", type=int, default=1)

    p = sub.add_parser("evaluate", help="score summaries against headlines")
    common(p, "corpus", "gazetteer", "split")
    p.add_argument("--summaries", type=Path)
    p.add_argument("--method", help="label for the report row")
    p.add_argument("--out", type=Path, help="JSON report")
    p.add_argument("--table", type=Path, help="text table")
    p.add_argument("--per-doc", type=Path, help="per-document JSONL scores")
    p.add_argument("--paper-literal-ne", action="store_true", help="ROUGE_NE precision normalised by the reference side")

    p = sub.add_parser("train", help="train a seq2seq model on the train/dev splits")
    common(p, "corpus", "annotations")
    p.add_argument("--config", type=Path, help="model config JSON")
    p.add_argument("--out", type=Path, help="checkpoint path")
    p.add_argument("--log", type=Path, help="training log CSV")
    p.add_argument("--vocab-size", type=int, default=25_000)

    p = sub.add_parser("stats", help="entity statistics per split")
    common(p, "corpus", "annotations", "split")
    p.add_argument("--fields", nargs="+", choices=FIELDS, default=["text", "headline", "abstract"])

    p = sub.add_parser("pipeline", help="annotate, summarize and evaluate into a work directory")
    common(p, "corpus", "gazetteer", "split")
    p.add_argument("--method", choices=METHODS + ("seq2seq_ner",))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ckpt", type=Path)
    p.add_argument("--workdir", type=Path)
    p.add_argument("--min-sentence-len", type=int, default=1)
    p.add_argument("--paper-literal-ne", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    get = lambda name: getattr(args, name, None)  # noqa: E731
    cfg = RunConfig(
        command=args.command,
        corpus_path=get("corpus"),
        annotations_path=get("annotations"),
        gazetteer_path=get("gazetteer"),
        summaries_path=get("summaries"),
        method=get("method"),
        seed=get("seed") or 0,
        output_path=get("workdir") if args.command == "pipeline" else get("out"),
        table_path=get("table"),
        per_doc_path=get("per_doc"),
        model_config_path=get("config"),
        ckpt_path=get("ckpt"),
        log_path=get("log"),
        split=get("split"),
        fields=tuple(get("fields") or FIELDS),
        min_sentence_len=get("min_sentence_len") or 1,
        vocab_size=get("vocab_size") or 25_000,
        metric_flags={"paper_literal_ne": bool(get("paper_literal_ne"))},
    )
    return cfg


COMMANDS = {
    "annotate": run_annotate,
    "summarize": run_summarize,
    "evaluate": run_evaluate,
    "train": run_train,
    "stats": run_stats,
    "pipeline": run_pipeline_end_to_end,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("NESUM_LOG_LEVEL", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        COMMANDS[cfg.command](cfg)
    except DivergenceError as exc:
        print(f"nesum {args.command}: numeric divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ConfigurationError, AlignmentError, CorpusLineError, OSError, ValueError) as exc:
        print(f"nesum {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
