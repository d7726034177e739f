"""Evaluation mathematics: correlations, AUROC, P/R/F1, improvement rate.

Tie handling is explicit everywhere because the pipeline's scores take few
distinct values (multiples of 1/k): Spearman uses average ranks, Kendall is
the tie-adjusted tau-b, and AUROC credits ties between classes with 1/2.
All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSeries, NoInconsistent, SingleClass
from .model import Classification, ImprovementStats, RoundRecord


@dataclass(frozen=True)
class PairedSeries:
    """Parallel (predicted, target) values for one dataset."""

    predicted: tuple[float, ...]
    target: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.predicted) != len(self.target):
            raise ValueError("predicted and target must have equal length")
        if not self.predicted:
            raise ValueError("series must be nonempty")
        for v in (*self.predicted, *self.target):
            if not math.isfinite(v):
                raise ValueError(f"non-finite value {v!r} in series")


def paired(predicted: Sequence[float], target: Sequence[float]) -> PairedSeries:
    return PairedSeries(tuple(float(v) for v in predicted), tuple(float(v) for v in target))


def _as_arrays(s: PairedSeries) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(s.predicted, dtype=float), np.asarray(s.target, dtype=float)


def pearson(s: PairedSeries) -> float:
    """Product-moment correlation; undefined for constant or length-1 series."""
    x, y = _as_arrays(s)
    n = len(x)
    if n < 2:
        raise DegenerateSeries("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSeries("zero variance series")
    return float(np.dot(dx, dy)) / math.sqrt(sxx * syy)


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values all receive the mean rank of their span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for idx in order[i : j + 1]:
            ranks[idx] = mean_rank
        i = j + 1
    return ranks


def spearman(s: PairedSeries) -> float:
    """Pearson correlation of average ranks."""
    return pearson(
        PairedSeries(tuple(average_ranks(s.predicted)), tuple(average_ranks(s.target)))
    )


def kendall_tau(s: PairedSeries) -> float:
    """Tau-b: (concordant - discordant) over the tie-adjusted pair count."""
    x, y = _as_arrays(s)
    n = len(x)
    if n < 2:
        raise DegenerateSeries("need at least 2 points")
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    upper = np.triu_indices(n, k=1)
    prod = dx[upper] * dy[upper]
    concordant = int((prod > 0).sum())
    discordant = int((prod < 0).sum())
    ties_x = int((dx[upper] == 0).sum())
    ties_y = int((dy[upper] == 0).sum())
    n0 = n * (n - 1) // 2
    if ties_x == n0 or ties_y == n0:
        raise DegenerateSeries("all values tied in one series")
    denominator = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    return (concordant - discordant) / denominator


def auroc(scores: Sequence[float], labels: Sequence[float]) -> float:
    """P(random positive outscores random negative), ties credited 1/2.

    Computed from average ranks, which equals the explicit all-pairs count.
    """
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    bad = [v for v in labels if v not in (0, 1)]
    if bad:
        raise ValueError(f"labels must be 0/1, got {bad[0]!r}")
    positives = sum(1 for v in labels if v == 1)
    negatives = len(labels) - positives
    if positives == 0 or negatives == 0:
        raise SingleClass("need at least one positive and one negative label")
    ranks = average_ranks([float(v) for v in scores])
    positive_rank_sum = sum(r for r, label in zip(ranks, labels) if label == 1)
    u = positive_rank_sum - positives * (positives + 1) / 2.0
    return u / (positives * negatives)


def prf(
    predicted_labels: Sequence[int],
    true_labels: Sequence[int],
    positive_class: int = 1,
) -> Classification:
    """F1/precision/recall; zero-denominator metrics come back as None.

    ``positive_class`` is configurable because which class counts as positive
    decides whether low recall / high precision reads as the safe direction.
    """
    if len(predicted_labels) != len(true_labels):
        raise ValueError("predicted and true labels must have equal length")
    if positive_class not in (0, 1):
        raise ValueError("positive_class must be 0 or 1")
    tp = fp = fn = 0
    for p, t in zip(predicted_labels, true_labels):
        if p == positive_class and t == positive_class:
            tp += 1
        elif p == positive_class:
            fp += 1
        elif t == positive_class:
            fn += 1
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Classification(f1=f1, precision=precision, recall=recall)


def improvement_stats(per_item_rounds: Sequence[Sequence[RoundRecord]]) -> ImprovementStats:
    """Fraction of initially inconsistent items whose last round scored 1.0."""
    inconsistent = 0
    corrected = 0
    for records in per_item_rounds:
        if not records:
            continue
        if records[0].score.final < 1.0:
            inconsistent += 1
            if records[-1].score.final == 1.0:
                corrected += 1
    if inconsistent == 0:
        raise NoInconsistent("no item was initially inconsistent")
    return ImprovementStats(
        inconsistent_count=inconsistent,
        corrected_count=corrected,
        rate=corrected / inconsistent,
    )
