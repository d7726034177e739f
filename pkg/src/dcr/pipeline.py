"""Per-item evaluate-and-improve loop plus parallel batch execution.

Each round splits the candidate, evaluates every sentence against the
reference, converts the reasons to marks and a score, and — unless the score
is already 1.0 or the round budget is spent — rewrites flagged sentences and
re-assembles the candidate for the next round. Items run independently on a
worker pool; results always come back in input order.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path

from . import agents
from .errors import Aborted, DcrError, ItemFailed
from .gateway import Backend, GenerationSettings
from .model import (
    EvaluationItem,
    ItemResult,
    RoundRecord,
    RunReport,
    TaskKind,
    Timing,
    validate_item,
)
from .prompts import PromptRegistry, default_registry
from .segmenter import DEFAULT_CONFIG, SegmentationConfig, split_sentences

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    """Loop controls. ``improve=False`` runs a single evaluate-only round."""

    task: TaskKind = TaskKind.SUMMARIZATION_CONSISTENCY
    max_rounds: int = 1
    improve: bool = True
    worker_count: int = 1
    fail_policy: str = "skip"

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.fail_policy not in ("skip", "abort"):
            raise ValueError("fail_policy must be 'skip' or 'abort'")
        if not self.improve and self.max_rounds != 1:
            raise ValueError("evaluate-only runs must use max_rounds=1")


def _split_units(candidate: str, task: TaskKind, seg: SegmentationConfig) -> list[str]:
    if task.paragraph_level:
        return [candidate]
    return split_sentences(candidate, seg)


def _next_candidate(
    units: list[str],
    verdicts: list,  # list[SentenceVerdict]
    rewrites: list,  # list[SentenceRewrite]
    task: TaskKind,
) -> str:
    """Re-assemble the candidate, applying rewrites only to aligned sentences."""
    if task.paragraph_level:
        return rewrites[0].improved
    by_sentence = {
        " ".join(v.sentence.split()): rw
        for v, rw in zip(verdicts, rewrites)
        if v.sentence_level
    }
    pieces = []
    for unit in units:
        rw = by_sentence.get(" ".join(unit.split()))
        pieces.append(rw.improved if rw is not None else unit)
    return " ".join(pieces)


def run_item(
    item: EvaluationItem,
    cfg: PipelineConfig,
    backend: Backend,
    settings: GenerationSettings | None = None,
    segmentation: SegmentationConfig = DEFAULT_CONFIG,
    registry: PromptRegistry | None = None,
) -> list[RoundRecord]:
    """Run up to ``cfg.max_rounds`` rounds on one item; one record per round.

    The loop stops as soon as the score hits 1.0 exactly (no rewrite call is
    issued for the final round) or the round budget is reached.
    """
    validate_item(item)
    settings = settings or GenerationSettings()
    registry = registry or default_registry()
    candidate = item.candidate
    records: list[RoundRecord] = []
    for round_index in range(1, cfg.max_rounds + 1):
        units = _split_units(candidate, cfg.task, segmentation)
        verdicts, evaluator_flag = agents.run_dce(
            item.reference, units, cfg.task, backend, settings, registry
        )
        verdicts = agents.run_amc(verdicts, backend, settings, registry)
        score = agents.compute_score(verdicts)
        converged = score.final == 1.0
        if converged != evaluator_flag:
            log.info(
                "item %s round %d: evaluator flag %s disagrees with score %.4f",
                item.item_id,
                round_index,
                evaluator_flag,
                score.final,
            )
        if converged or round_index == cfg.max_rounds or not cfg.improve:
            records.append(
                RoundRecord(
                    round_index=round_index,
                    verdicts=tuple(verdicts),
                    score=score,
                    rewrites=(),
                    converged=converged,
                )
            )
            break
        rewrites = agents.run_rai(
            item.reference,
            verdicts,
            cfg.task,
            backend,
            settings,
            registry,
            candidate_text=candidate if cfg.task.paragraph_level else None,
        )
        records.append(
            RoundRecord(
                round_index=round_index,
                verdicts=tuple(verdicts),
                score=score,
                rewrites=tuple(rewrites),
                converged=False,
            )
        )
        candidate = _next_candidate(units, verdicts, rewrites, cfg.task)
    return records


class _ProgressLog:
    """Append-only JSONL progress log, one line per completed item."""

    def __init__(self, path: Path):
        self._path = path
        self._lock = threading.Lock()
        path.parent.mkdir(parents=True, exist_ok=True)

    def write(self, item_id: str, rounds: int, final: float, seconds: float) -> None:
        line = json.dumps(
            {"item_id": item_id, "rounds": rounds, "final": final, "seconds": seconds}
        )
        with self._lock:
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def run_batch(
    items: list[EvaluationItem],
    cfg: PipelineConfig,
    backend: Backend,
    settings: GenerationSettings | None = None,
    segmentation: SegmentationConfig = DEFAULT_CONFIG,
    registry: PromptRegistry | None = None,
    progress_path: str | Path | None = None,
) -> RunReport:
    """Process ``items`` on a pool of ``cfg.worker_count`` workers.

    ``per_item`` comes back in input order regardless of completion order;
    aggregate metrics stay empty (see ``bench_io.fill_aggregates``). Under
    ``fail_policy='skip'`` failed items are listed in ``report.failures``;
    under ``'abort'`` the first failure raises ``Aborted``.
    """
    settings = settings or GenerationSettings()
    registry = registry or default_registry()
    progress = _ProgressLog(Path(progress_path)) if progress_path else None

    results: list[ItemResult | None] = [None] * len(items)
    failures: list[tuple[str, str]] = []
    timings: list[tuple[str, float]] = []
    state_lock = threading.Lock()
    started = time.perf_counter()

    def work(index: int) -> None:
        item = items[index]
        item_started = time.perf_counter()
        try:
            records = run_item(item, cfg, backend, settings, segmentation, registry)
        except DcrError as exc:
            raise ItemFailed(item.item_id, exc) from exc
        elapsed = time.perf_counter() - item_started
        result = ItemResult(
            item_id=item.item_id,
            final_score=records[-1].score.final,
            rounds=tuple(records),
            human_label=item.human_label,
        )
        with state_lock:
            results[index] = result
            timings.append((item.item_id, elapsed))
        if progress:
            progress.write(item.item_id, len(records), result.final_score, elapsed)

    if items:
        with ThreadPoolExecutor(max_workers=cfg.worker_count) as pool:
            futures = {pool.submit(work, i): i for i in range(len(items))}
            if cfg.fail_policy == "abort":
                done, pending = wait(futures, return_when=FIRST_EXCEPTION)
                first_error: BaseException | None = None
                for future in done:
                    exc = future.exception()
                    if exc is not None:
                        first_error = exc
                        break
                if first_error is not None:
                    for future in pending:
                        future.cancel()
                    if isinstance(first_error, ItemFailed):
                        raise Aborted(str(first_error)) from first_error
                    raise first_error
            else:
                for future in futures:
                    exc = future.exception()
                    if isinstance(exc, ItemFailed):
                        with state_lock:
                            failures.append((exc.item_id, str(exc.cause)))
                    elif exc is not None:
                        raise exc

    total = time.perf_counter() - started if items else 0.0
    order = {item.item_id: i for i, item in enumerate(items)}
    timings.sort(key=lambda pair: order[pair[0]])
    failures.sort(key=lambda pair: order[pair[0]])
    per_item = tuple(r for r in results if r is not None)
    return RunReport(
        per_item=per_item,
        timing=Timing(total_s=total, per_item_s=tuple(timings)),
        failures=tuple(failures),
    )
