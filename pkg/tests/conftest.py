import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nesum.corpus import OUTSIDE, AnnotatedText, EntityType, IobTag, encode_spans  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


def random_tags(rng, n, entity_rate=0.3):
    """A well-formed random IOB2 sequence of length n."""
    spans = []
    i = 0
    while i < n:
        if rng.random() < entity_rate:
            length = min(rng.randint(1, 3), n - i)
            spans.append((i, i + length, rng.choice(list(EntityType))))
            i += length
        else:
            i += 1
    return encode_spans(spans, n)


def random_article(rng, max_sentences=20, vocab=12, max_len=12, entity_rate=0.3):
    """Random AnnotatedText built from explicit sentences (bounds set directly)."""
    n_sent = rng.randint(1, max_sentences)
    tokens, bounds, tags = [], [], []
    for _ in range(n_sent):
        length = rng.randint(1, max_len)
        start = len(tokens)
        tokens += [f"w{rng.randrange(vocab)}" for _ in range(length)]
        bounds.append((start, len(tokens)))
        # spans stay inside their sentence
        tags += random_tags(rng, length, entity_rate)
    return AnnotatedText(tokens, bounds, tags)


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
