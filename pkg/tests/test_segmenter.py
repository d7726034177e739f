from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcr.errors import NoSentences
from dcr.segmenter import (
    DEFAULT_ABBREVIATIONS,
    SegmentationConfig,
    load_abbreviations,
    split_sentences,
)


def normalized(text):
    return " ".join(text.split())


def test_two_terminal_periods():
    assert split_sentences("A cat sat. A dog ran.") == ["A cat sat.", "A dog ran."]


def oracle_split(text, abbreviations):
    """Scan for terminators not preceded by a listed abbreviation.

    Independent re-statement of the boundary rule used to cross-check the
    production splitter on guard-sensitive inputs.
    """
    boundaries = []
    for i, ch in enumerate(text):
        if ch not in ".!?":
            continue
        if i + 1 < len(text) and not text[i + 1].isspace():
            continue
        if ch == "." and any(
            text[: i + 1].endswith(a)
            and (i + 1 - len(a) == 0 or not text[i - len(a)].isalnum())
            for a in abbreviations
        ):
            continue
        boundaries.append(i + 1)
    pieces, start = [], 0
    for b in boundaries:
        pieces.append(text[start:b].strip())
        start = b
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    return [p for p in pieces if p]


def test_abbreviation_guard_matches_oracle():
    text = "Dr. Smith left. He returned."
    cfg = SegmentationConfig(abbreviation_list=frozenset({"Dr."}))
    expected = oracle_split(text, {"Dr."})
    assert expected == ["Dr. Smith left.", "He returned."]
    assert split_sentences(text, cfg) == expected


@pytest.mark.parametrize(
    "text",
    [
        "Mr. Jones met Dr. Smith. They spoke for an hour. It went well.",
        "Prices rose 3.5 percent. Analysts were surprised.",
        "The U.S. team won. The U.K. team placed second.",
    ],
)
def test_guarded_inputs_match_oracle(text):
    assert split_sentences(text) == oracle_split(text, DEFAULT_ABBREVIATIONS)


def test_tokenized_news_summary_splits_into_two_bullets():
    text = (
        "Usain bolt will compete at the relay championship on may 2 and 3 as part "
        "of the jamaican team . The six-time olympic gold medalist will be part of "
        "jamaica 's team at the iaaf/btc world ."
    )
    sentences = split_sentences(text)
    assert len(sentences) == 2
    assert sentences[0] == (
        "Usain bolt will compete at the relay championship on may 2 and 3 as part "
        "of the jamaican team ."
    )
    assert sentences[1] == (
        "The six-time olympic gold medalist will be part of jamaica 's team at the "
        "iaaf/btc world ."
    )


def test_quote_closure_attaches_to_sentence():
    text = 'He said "Stop." Then he left.'
    assert split_sentences(text) == ['He said "Stop."', "Then he left."]


def test_single_sentence_passthrough():
    assert split_sentences("One sentence only") == ["One sentence only"]


def test_short_fragments_merge_forward():
    cfg = SegmentationConfig(min_sentence_chars=3)
    assert split_sentences("a. long sentence here.", cfg) == ["a. long sentence here."]


def test_trailing_short_fragment_merges_backward():
    cfg = SegmentationConfig(min_sentence_chars=3)
    assert split_sentences("long sentence here. b.", cfg) == ["long sentence here. b."]


def test_newline_boundary_mode():
    cfg = SegmentationConfig(treat_newline_as_boundary=True)
    assert split_sentences("first line\nsecond line", cfg) == ["first line", "second line"]


def test_whitespace_only_raises():
    with pytest.raises(NoSentences):
        split_sentences("   \n\t ")


def test_punctuation_only_raises():
    with pytest.raises(NoSentences):
        split_sentences("... !!! ??")


def test_abbreviation_file_loading(tmp_path):
    path = tmp_path / "abbr.txt"
    path.write_text("Mr.\nDr.\n\nU.S.\n", encoding="utf-8")
    assert load_abbreviations(str(path)) == frozenset({"Mr.", "Dr.", "U.S."})


def test_config_rejects_bad_abbreviations():
    with pytest.raises(ValueError):
        SegmentationConfig(abbreviation_list=frozenset({"Dr"}))


# --- properties -----------------------------------------------------------

_sentence_text = st.text(
    alphabet=st.sampled_from(list("abcXY .!?\n'\"0123456789")),
    min_size=1,
    max_size=120,
).filter(lambda t: any(ch.isalnum() for ch in t))


@given(_sentence_text)
def test_lossless_up_to_whitespace(text):
    sentences = split_sentences(text)
    assert normalized(" ".join(sentences)) == normalized(text)
    joined = Counter(ch for ch in " ".join(sentences) if not ch.isspace())
    original = Counter(ch for ch in text if not ch.isspace())
    assert joined == original


@given(_sentence_text)
def test_split_idempotent(text):
    sentences = split_sentences(text)
    for sentence in sentences:
        assert split_sentences(sentence) == [sentence]


@given(_sentence_text)
def test_at_least_one_sentence(text):
    assert len(split_sentences(text)) >= 1


@given(_sentence_text)
def test_newline_mode_properties_hold(text):
    cfg = SegmentationConfig(treat_newline_as_boundary=True)
    sentences = split_sentences(text, cfg)
    assert len(sentences) >= 1
    assert normalized(" ".join(sentences)) == normalized(text)
