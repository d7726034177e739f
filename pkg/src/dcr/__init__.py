"""Consistency evaluation and improvement for LLM-generated text.

Splits a candidate into sentences, judges each against the full reference,
converts the judgments into a [0, 1] score, and optionally rewrites flagged
sentences over multiple rounds. Includes a benchmark harness with pluggable
backends (live HTTP, disk cache, deterministic mock).
"""

from .agents import compute_score, run_amc, run_dce, run_rai
from .gateway import (
    CachingBackend,
    CompletionRequest,
    CompletionResponse,
    GenerationSettings,
    HttpBackend,
    MockBackend,
    make_mock,
)
from .model import (
    ConsistencyScore,
    EvaluationItem,
    ItemResult,
    RoundRecord,
    RunReport,
    SentenceRewrite,
    SentenceVerdict,
    TaskKind,
    validate_item,
)
from .pipeline import PipelineConfig, run_batch, run_item
from .segmenter import SegmentationConfig, load_abbreviations, split_sentences

__all__ = [
    "CachingBackend",
    "CompletionRequest",
    "CompletionResponse",
    "ConsistencyScore",
    "EvaluationItem",
    "GenerationSettings",
    "HttpBackend",
    "ItemResult",
    "MockBackend",
    "PipelineConfig",
    "RoundRecord",
    "RunReport",
    "SegmentationConfig",
    "SentenceRewrite",
    "SentenceVerdict",
    "TaskKind",
    "compute_score",
    "load_abbreviations",
    "make_mock",
    "run_amc",
    "run_batch",
    "run_dce",
    "run_item",
    "run_rai",
    "split_sentences",
    "validate_item",
]

__version__ = "0.1.0"
