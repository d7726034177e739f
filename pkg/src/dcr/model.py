"""Domain types shared across the pipeline. No I/O, no LLM logic.

All types are immutable value objects; they are safe to share between
concurrent workers. JSON serialization lives in :mod:`dcr.bench_io`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import BadLabel, EmptyText


class TaskKind(enum.Enum):
    """Which evaluation task an item belongs to.

    Each variant maps to exactly one evaluator prompt template and one
    improver prompt template.
    """

    SEMANTIC_PAIR = "semantic"
    SUMMARIZATION_CONSISTENCY = "summarization"
    PARAGRAPH_LEVEL_CONSISTENCY = "paragraph"

    @property
    def paragraph_level(self) -> bool:
        return self is TaskKind.PARAGRAPH_LEVEL_CONSISTENCY


@dataclass(frozen=True)
class EvaluationItem:
    """One (reference, candidate) pair to evaluate, with an optional human label.

    ``binary_label`` marks labels that must be exactly 0 or 1 (duplicate-pair
    style corpora); rating-style labels (e.g. averaged annotator scores) leave
    it False.
    """

    item_id: str
    reference: str
    candidate: str
    human_label: float | None = None
    binary_label: bool = False


@dataclass(frozen=True)
class SentenceVerdict:
    """One candidate sentence plus the evaluator's reason and parsed polarity.

    ``sentence_level`` is True when the entry refers to one locally split
    candidate sentence; entries that talk about the paragraph as a whole (or
    that match no local sentence) carry False and are excluded from scoring.
    ``polarity`` is filled in by the mark classifier: +1 consistent, -1 not.
    """

    sentence: str
    reason: str
    polarity: int | None = None
    sentence_level: bool = True

    def __post_init__(self) -> None:
        if self.polarity is not None and self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.polarity!r}")


@dataclass(frozen=True)
class ConsistencyScore:
    """Per-sentence marks and the combined score.

    ``raw = (sum(z) + alpha) / (k + beta)`` and ``final = (raw + 1) / 2``,
    where ``alpha``/``beta`` cancel the contribution of excluded
    (non-sentence-level) entries and ``k`` is the total entry count.
    ``final`` is 1.0 exactly iff every included mark is +1.
    """

    z: tuple[int, ...]
    alpha: float
    beta: float
    k: int
    raw: float
    final: float


@dataclass(frozen=True)
class SentenceRewrite:
    """One improver output entry: the original sentence, the rewrite, and why."""

    original: str
    improved: str
    reason: str


@dataclass(frozen=True)
class RoundRecord:
    """Snapshot of one evaluate(-and-improve) round for a single item."""

    round_index: int
    verdicts: tuple[SentenceVerdict, ...]
    score: ConsistencyScore
    rewrites: tuple[SentenceRewrite, ...] = ()
    converged: bool = False


@dataclass(frozen=True)
class ItemResult:
    """Completed rounds for one item; ``final_score`` is the last round's score."""

    item_id: str
    final_score: float
    rounds: tuple[RoundRecord, ...]
    human_label: float | None = None

    @property
    def initial_score(self) -> float:
        return self.rounds[0].score.final


@dataclass(frozen=True)
class Correlations:
    pearson: float | None
    spearman: float | None
    kendall_tau: float | None


@dataclass(frozen=True)
class Classification:
    f1: float | None
    precision: float | None
    recall: float | None


@dataclass(frozen=True)
class ImprovementStats:
    inconsistent_count: int
    corrected_count: int
    rate: float | None


@dataclass(frozen=True)
class Timing:
    total_s: float
    per_item_s: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class RunReport:
    """Aggregate benchmark output.

    ``per_item`` is always filled by the batch runner; the aggregate fields
    (correlations, auroc, classification, improvement) start empty and are
    filled by :func:`dcr.bench_io.fill_aggregates`.
    """

    per_item: tuple[ItemResult, ...]
    correlations: Correlations | None = None
    auroc: float | None = None
    classification: Classification | None = None
    improvement: ImprovementStats | None = None
    timing: Timing = field(default_factory=lambda: Timing(0.0))
    config_echo: tuple[tuple[str, str], ...] = ()
    failures: tuple[tuple[str, str], ...] = ()


def validate_item(item: EvaluationItem) -> EvaluationItem:
    """Return ``item`` unchanged if its invariants hold.

    Raises ``EmptyText`` when reference or candidate is blank and ``BadLabel``
    when a binary-flagged label is not exactly 0 or 1.
    """
    if not item.reference.strip():
        raise EmptyText(f"item {item.item_id!r}: reference is blank")
    if not item.candidate.strip():
        raise EmptyText(f"item {item.item_id!r}: candidate is blank")
    if item.binary_label and item.human_label is not None:
        if item.human_label not in (0, 1):
            raise BadLabel(
                f"item {item.item_id!r}: binary label must be 0 or 1, "
                f"got {item.human_label!r}"
            )
    return item
