"""Rule-based sentence splitting for candidate paragraphs.

Deterministic and dependency-free: a terminator set {. ! ?} with an
abbreviation guard, plus closure over trailing quotes/brackets. Periods not
followed by whitespace (decimals, "U.S.", "iaaf/btc") never split. Benchmark
texts are news-style, where these rules suffice.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoSentences

TERMINATORS = frozenset(".!?")
# Closing quotes/brackets that belong to the sentence they terminate.
_CLOSERS = frozenset("\"')]}’”")

DEFAULT_ABBREVIATIONS: frozenset[str] = frozenset(
    {
        "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "St.", "Jr.", "Sr.",
        "vs.", "etc.", "e.g.", "i.e.", "cf.", "al.", "No.", "Fig.",
        "U.S.", "U.K.", "U.N.", "Inc.", "Ltd.", "Co.", "Corp.",
        "Gov.", "Sgt.", "Capt.", "Rev.", "Gen.", "Rep.", "Sen.",
        "Jan.", "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.",
        "Sep.", "Sept.", "Oct.", "Nov.", "Dec.",
    }
)


@dataclass(frozen=True)
class SegmentationConfig:
    """Knobs for the sentence splitter.

    Sentences with fewer than ``min_sentence_chars`` non-space characters are
    merged into a neighbour, which keeps noisy tokenized corpora (space-padded
    punctuation) from producing degenerate one-token sentences.
    """

    abbreviation_list: frozenset[str] = DEFAULT_ABBREVIATIONS
    min_sentence_chars: int = 2
    treat_newline_as_boundary: bool = False

    def __post_init__(self) -> None:
        if self.min_sentence_chars < 1:
            raise ValueError("min_sentence_chars must be >= 1")
        for abbr in self.abbreviation_list:
            if not abbr.endswith("."):
                raise ValueError(f"abbreviation {abbr!r} does not end with a period")


DEFAULT_CONFIG = SegmentationConfig()


def load_abbreviations(path: str) -> frozenset[str]:
    """Load an abbreviation list from a UTF-8 text file, one entry per line."""
    with open(path, encoding="utf-8") as fh:
        entries = {line.strip() for line in fh}
    return frozenset(e for e in entries if e)


def _ends_with_abbreviation(text: str, end: int, abbreviations: frozenset[str]) -> bool:
    """True when text[:end+1] ends with a listed abbreviation at a word boundary."""
    head = text[: end + 1]
    for abbr in abbreviations:
        if not head.endswith(abbr):
            continue
        start = len(head) - len(abbr)
        if start == 0 or not (head[start - 1].isalnum() or head[start - 1] == "."):
            return True
    return False


def _nonspace_len(s: str) -> int:
    return sum(1 for ch in s if not ch.isspace())


def split_sentences(
    text: str, cfg: SegmentationConfig = DEFAULT_CONFIG
) -> list[str]:
    """Split ``text`` into an ordered list of sentences.

    Lossless up to whitespace: joining the result with single spaces and
    collapsing runs of whitespace reproduces the collapsed input. Raises
    ``NoSentences`` for input with no word characters.
    """
    if not any(ch.isalnum() for ch in text):
        raise NoSentences("input contains no sentence material")

    pieces: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n" and cfg.treat_newline_as_boundary:
            piece = text[start:i].strip()
            if piece:
                pieces.append(piece)
            start = i + 1
            i += 1
            continue
        if ch in TERMINATORS:
            if ch == "." and _ends_with_abbreviation(text, i, cfg.abbreviation_list):
                i += 1
                continue
            j = i + 1
            while j < n and text[j] in TERMINATORS:
                j += 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            if j >= n or text[j].isspace():
                piece = text[start:j].strip()
                if piece:
                    pieces.append(piece)
                start = j
                i = j
                continue
        i += 1
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)

    return _merge_short(pieces, cfg.min_sentence_chars)


def _degenerate(piece: str, min_chars: int) -> bool:
    """Too short to stand alone, or empty of word characters entirely."""
    return _nonspace_len(piece) < min_chars or not any(ch.isalnum() for ch in piece)


def _merge_short(pieces: list[str], min_chars: int) -> list[str]:
    """Merge degenerate fragments forward (the trailing one backward)."""
    merged: list[str] = []
    for piece in pieces:
        if merged and _degenerate(merged[-1], min_chars):
            merged[-1] = merged[-1] + " " + piece
        else:
            merged.append(piece)
    if len(merged) >= 2 and _degenerate(merged[-1], min_chars):
        last = merged.pop()
        merged[-1] = merged[-1] + " " + last
    return merged
