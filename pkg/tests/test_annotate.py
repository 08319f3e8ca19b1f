import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nesum.annotate import Gazetteer, annotate_tokens, load_gazetteer
from nesum.corpus import EntityType, IobTag, is_well_formed, repair_iob2, tokenize
from nesum.errors import CorpusLineError
from oracles import brute_longest_match

G = EntityType.GeographicalNames


def tsv(tmp_path, text):
    path = tmp_path / "g.tsv"
    path.write_text(text, encoding="utf-8")
    return path


def test_load_entry(tmp_path):
    g = load_gazetteer(tsv(tmp_path, "Jan Novák\tP\n"))
    assert g.entries == {("jan", "novák"): EntityType.PersonalNames}
    assert g.max_len == 2


def test_duplicate_last_wins(tmp_path):
    g = load_gazetteer(tsv(tmp_path, "Praha\tG\nBrno\tG\nPRAHA\tC\n"))
    assert len(g) == 2
    assert g.entries[("praha",)] == EntityType.Institutions


def test_unknown_code_reports_line(tmp_path):
    with pytest.raises(CorpusLineError, match="line 2"):
        load_gazetteer(tsv(tmp_path, "Praha\tG\nBrno\tX\n"))


def test_hundred_entry_file(data_dir):
    g = load_gazetteer(data_dir / "gazetteer_100.tsv")
    keys = set()
    longest = 0
    for line in (data_dir / "gazetteer_100.tsv").read_text(encoding="utf-8").splitlines():
        surface = line.split("\t")[0]
        words = tuple(w.lower() for w in tokenize(surface))
        keys.add(words)
        longest = max(longest, len(words))
    assert len(g) == len(keys) == 100
    assert g.max_len == longest


def test_single_match():
    g = Gazetteer()
    g.add("Praha", G)
    assert annotate_tokens(g, ["Vítá", "Praha", "."]) == [IobTag("O"), IobTag("B", G), IobTag("O")]


def test_longest_match_wins():
    g = Gazetteer()
    g.add("new", EntityType.PersonalNames)
    g.add("new york", G)
    assert [str(t) for t in annotate_tokens(g, ["New", "York"])] == ["B-G", "I-G"]


def test_case_insensitive():
    g = Gazetteer()
    g.add("Česká televize", EntityType.MediaNames)
    assert [str(t) for t in g.annotate(["ČESKÁ", "televize"])] == ["B-M", "I-M"]


def random_gazetteer(rng, vocab):
    g = Gazetteer()
    for _ in range(rng.randint(1, 12)):
        g.add([rng.choice(vocab) for _ in range(rng.randint(1, 4))], rng.choice(list(EntityType)))
    return g


@pytest.mark.parametrize("seed", range(40))
def test_against_brute_force(seed):
    rng = random.Random(seed)
    vocab = ["a", "b", "C", "d", "E"]
    g = random_gazetteer(rng, vocab)
    tokens = [rng.choice(vocab) for _ in range(rng.randint(0, 40))]
    assert [str(t) for t in annotate_tokens(g, tokens)] == brute_longest_match(g.entries, tokens)


@settings(max_examples=200)
@given(st.integers(0, 2**32))
def test_length_and_well_formedness(seed):
    rng = random.Random(seed)
    vocab = ["a", "b", "c"]
    g = random_gazetteer(rng, vocab)
    tokens = [rng.choice(vocab) for _ in range(rng.randint(0, 30))]
    tags = annotate_tokens(g, tokens)
    assert len(tags) == len(tokens)
    assert is_well_formed(tags)
    assert repair_iob2(tags)[1] == 0
    assert annotate_tokens(g, tokens) == tags


def match_lengths(g, tokens):
    """Length of the match chosen at each start position the scan visits."""
    lowered = [t.lower() for t in tokens]
    out = {}
    for i in range(len(lowered)):
        for length in range(min(g.max_len, len(lowered) - i), 0, -1):
            if tuple(lowered[i : i + length]) in g.entries:
                out[i] = length
                break
    return out


@settings(max_examples=200)
@given(st.integers(0, 2**32))
def test_adding_entry_never_shortens_match_at_a_position(seed):
    rng = random.Random(seed)
    vocab = ["a", "b", "c"]
    g = random_gazetteer(rng, vocab)
    tokens = [rng.choice(vocab) for _ in range(rng.randint(0, 25))]
    before = match_lengths(g, tokens)
    g.add([rng.choice(vocab) for _ in range(rng.randint(1, 4))], rng.choice(list(EntityType)))
    after = match_lengths(g, tokens)
    for pos, length in before.items():
        assert after[pos] >= length
