"""Named-entity-aware summarization toolkit.

ROUGE_RAW and ROUGE_NE metrics, First/Random/TextRank/Named Entity Density
extractive summarizers, a gazetteer annotator and a small attentional
seq2seq model (``nesum.seq2seq``).
"""

from .annotate import Gazetteer, annotate_tokens, load_gazetteer
from .corpus import (
    AnnotatedDocument,
    AnnotatedText,
    Document,
    EntityStats,
    EntityType,
    IobTag,
    attach_annotations,
    corpus_stats,
    entity_token_count,
    load_corpus,
    split_sentences,
    tokenize,
)
from .extractive import SummarizerOutput, ned_scores, select_first, select_ned, select_random, textrank_select
from .kernels import BACKEND as KERNEL_BACKEND
from .metrics import MetricReport, Prf, aggregate, entity_view, rouge_ne, rouge_raw_l, rouge_raw_n

__version__ = "0.1.0"
