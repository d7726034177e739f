"""The three LLM agents: per-sentence evaluator, mark classifier, rewriter.

Each operation is one prompt-render -> complete -> parse step with strict
output validation. On an unparseable response the identical request is
re-issued once with a terse "Return only valid JSON." suffix; a second
failure propagates so the caller can mark the item failed instead of
guessing. Responses may arrive as raw JSON, JSON inside markdown code
fences, or JSON surrounded by prose; anything else raises ``ParseError``.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, replace
from typing import Callable, Iterator, TypeVar

from .errors import (
    AllExcluded,
    BadMark,
    LengthMismatch,
    ParseError,
    SchemaError,
)
from .gateway import Backend, CompletionRequest, GenerationSettings
from .model import ConsistencyScore, SentenceRewrite, SentenceVerdict, TaskKind
from .prompts import PromptRegistry, default_registry

log = logging.getLogger(__name__)

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\s*\n?(.*?)```", re.DOTALL)
_JSON_RETRY_SUFFIX = "\n\nReturn only valid JSON."

# Phrasings that mark a reason as paragraph-scoped rather than about one
# candidate sentence; such entries are excluded from the score.
_PARAGRAPH_SCOPE_RE = re.compile(
    r"the two paragraphs|th(?:is|e) summary is (?:not )?consistent",
    re.IGNORECASE,
)

T = TypeVar("T")


def _normalize(text: str) -> str:
    return " ".join(text.split())


def iter_json_candidates(text: str) -> Iterator[object]:
    """Yield every JSON object/array decodable from ``text``, best guess first."""
    try:
        yield json.loads(text)
        return
    except ValueError:
        pass
    for match in _FENCE_RE.finditer(text):
        try:
            yield json.loads(match.group(1))
        except ValueError:
            continue
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch in "{[":
            try:
                value, _ = decoder.raw_decode(text, i)
            except ValueError:
                continue
            yield value


def extract_json(text: str, schema_check: Callable[[object], T | None]) -> T:
    """Return the first JSON candidate accepted by ``schema_check``.

    ``ParseError`` when no JSON value exists at all; ``SchemaError`` when
    values exist but none has the expected shape.
    """
    saw_value = False
    for value in iter_json_candidates(text):
        saw_value = True
        converted = schema_check(value)
        if converted is not None:
            return converted
    if saw_value:
        raise SchemaError(f"no JSON value with the expected shape in: {text[:200]!r}")
    raise ParseError(f"no JSON object or array found in: {text[:200]!r}")


def _complete_and_parse(
    backend: Backend,
    settings: GenerationSettings,
    user_text: str,
    parse: Callable[[str], T],
) -> T:
    request = CompletionRequest(system_text=None, user_text=user_text, settings=settings)
    response = backend.complete(request)
    try:
        return parse(response.text)
    except ParseError:
        retry = CompletionRequest(
            system_text=None,
            user_text=user_text + _JSON_RETRY_SUFFIX,
            settings=settings,
        )
        return parse(backend.complete(retry).text)


# --- divide-conquer evaluator --------------------------------------------


@dataclass(frozen=True)
class DceEntry:
    sentence: str
    reason: str


@dataclass(frozen=True)
class DceOutput:
    entries: tuple[DceEntry, ...]
    is_consistent: bool


def _dce_schema(value: object) -> DceOutput | None:
    if not isinstance(value, dict):
        return None
    if "is_consistent" not in value:
        return None
    raw = value.get("reason", value.get("reasons"))
    if raw is None:
        return None
    if isinstance(raw, (dict, str)):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        return None
    entries = []
    for part in raw:
        if isinstance(part, dict) and "reason" in part:
            entries.append(
                DceEntry(sentence=str(part.get("sentence", "")), reason=str(part["reason"]))
            )
        elif isinstance(part, str):
            entries.append(DceEntry(sentence="", reason=part))
        else:
            return None
    return DceOutput(entries=tuple(entries), is_consistent=bool(value["is_consistent"]))


def parse_dce_response(text: str) -> DceOutput:
    return extract_json(text, _dce_schema)


def align_verdicts(
    output: DceOutput, candidate_sentences: list[str], task: TaskKind
) -> list[SentenceVerdict]:
    """Map raw evaluator entries onto the locally split sentences.

    An entry is sentence-level when its echoed sentence matches one local
    sentence up to whitespace and its reason is not paragraph-scoped. For the
    paragraph-level task the whole candidate is the unit of analysis, so every
    entry counts.
    """
    local = {_normalize(s) for s in candidate_sentences}
    verdicts = []
    for entry in output.entries:
        if task.paragraph_level:
            sentence_level = True
        else:
            sentence_level = _normalize(entry.sentence) in local and not (
                _PARAGRAPH_SCOPE_RE.search(entry.reason)
            )
        verdicts.append(
            SentenceVerdict(
                sentence=entry.sentence,
                reason=entry.reason,
                polarity=None,
                sentence_level=sentence_level,
            )
        )
    return verdicts


def run_dce(
    reference: str,
    candidate_sentences: list[str],
    task: TaskKind,
    backend: Backend,
    settings: GenerationSettings,
    registry: PromptRegistry | None = None,
) -> tuple[list[SentenceVerdict], bool]:
    """Check each candidate sentence against the entire reference.

    Returns one verdict per evaluator output entry (polarity unset) plus the
    evaluator's own overall consistency flag, kept so callers can log
    disagreements with the mark-derived score.
    """
    registry = registry or default_registry()
    candidate_text = " ".join(candidate_sentences)
    if task is TaskKind.SEMANTIC_PAIR:
        user_text = registry.render(
            "dce_semantic",
            {"true_answer": reference, "answer_to_evaluate": candidate_text},
        )
    elif task is TaskKind.SUMMARIZATION_CONSISTENCY:
        user_text = registry.render(
            "dce_summarization", {"article": reference, "summary": candidate_text}
        )
    else:
        user_text = registry.render(
            "dce_paragraph", {"article": reference, "summary": candidate_text}
        )
    output = _complete_and_parse(backend, settings, user_text, parse_dce_response)
    return align_verdicts(output, candidate_sentences, task), output.is_consistent


# --- auto-metric converter ------------------------------------------------


def _coerce_mark(value: object) -> int:
    if isinstance(value, bool):
        raise BadMark(f"mark must be -1 or +1, got {value!r}")
    if isinstance(value, int) and value in (-1, 1):
        return value
    if isinstance(value, float) and value in (-1.0, 1.0):
        return int(value)
    raise BadMark(f"mark must be -1 or +1, got {value!r}")


def _amc_schema(value: object) -> list[object] | None:
    if isinstance(value, dict) and isinstance(value.get("answer"), list):
        return value["answer"]
    if isinstance(value, list) and value and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return value
    return None


def parse_amc_response(text: str) -> list[object]:
    return extract_json(text, _amc_schema)


def format_reasons(reasons: list[str]) -> str:
    """Render reasons as the bulleted quote-list the classifier prompt expects."""
    lines = [f'*"{reason}"' for reason in reasons]
    return ",\n".join(lines)


def run_amc(
    verdicts: list[SentenceVerdict],
    backend: Backend,
    settings: GenerationSettings,
    registry: PromptRegistry | None = None,
) -> list[SentenceVerdict]:
    """Classify each reason as positive (+1) or negative (-1), positionally."""
    if not verdicts:
        raise LengthMismatch("no verdicts to classify")
    for v in verdicts:
        if not v.reason.strip():
            raise ValueError("every verdict must carry a nonempty reason")
    registry = registry or default_registry()
    user_text = registry.render(
        "amc", {"attempt_answer": format_reasons([v.reason for v in verdicts])}
    )
    raw_marks = _complete_and_parse(backend, settings, user_text, parse_amc_response)
    marks = [_coerce_mark(m) for m in raw_marks]
    if len(marks) != len(verdicts):
        raise LengthMismatch(
            f"classifier returned {len(marks)} marks for {len(verdicts)} reasons"
        )
    return [replace(v, polarity=m) for v, m in zip(verdicts, marks)]


# --- score ----------------------------------------------------------------


def compute_score(verdicts: list[SentenceVerdict]) -> ConsistencyScore:
    """Combine per-sentence marks into one score in [0, 1].

    Non-sentence-level entries are cancelled out: ``alpha`` subtracts their
    mark sum and ``beta`` subtracts their count, which is exactly equivalent
    to deleting them. With no exclusions this reduces to alpha = beta = 0.
    """
    if not verdicts:
        raise AllExcluded("no verdicts to score")
    for v in verdicts:
        if v.polarity is None:
            raise ValueError("every verdict must have polarity set before scoring")
    z = tuple(v.polarity for v in verdicts if v.polarity is not None)
    excluded = [v.polarity for v in verdicts if not v.sentence_level]
    alpha = -float(sum(excluded))
    beta = -float(len(excluded))
    k = len(verdicts)
    if k + beta <= 0:
        raise AllExcluded("every entry was excluded; score undefined")
    raw = (sum(z) + alpha) / (k + beta)
    final = (raw + 1.0) / 2.0
    return ConsistencyScore(z=z, alpha=alpha, beta=beta, k=k, raw=raw, final=final)


# --- reason-assisted improver ----------------------------------------------


def _rewrite_schema_list(value: object) -> list[dict] | None:
    if isinstance(value, dict):
        value = [value]
    if not isinstance(value, list) or not value:
        return None
    out = []
    for part in value:
        if not isinstance(part, dict):
            return None
        if "improved_sentence" not in part and "improved_summary" not in part:
            return None
        out.append(part)
    return out


def parse_rai_response(text: str) -> list[dict]:
    return extract_json(text, _rewrite_schema_list)


_ALREADY_CONSISTENT = "ALREADY CONSISTENT"


def _build_rewrite(part: dict, original: str) -> SentenceRewrite:
    improved = str(part.get("improved_sentence", part.get("improved_summary", "")))
    reason = str(part.get("reason", ""))
    if reason.strip().upper() == _ALREADY_CONSISTENT and _normalize(
        improved
    ) != _normalize(original):
        improved = original
    return SentenceRewrite(original=original, improved=improved, reason=reason)


def run_rai(
    reference: str,
    verdicts: list[SentenceVerdict],
    task: TaskKind,
    backend: Backend,
    settings: GenerationSettings,
    registry: PromptRegistry | None = None,
    candidate_text: str | None = None,
) -> list[SentenceRewrite]:
    """Rewrite flagged sentences guided by the evaluator's reasons.

    All sentences are submitted; consistent ones (+1) are restored verbatim
    locally even if the model altered them, so only -1 sentences can change.
    For the paragraph-level task the single unit is the whole candidate, which
    must arrive as ``candidate_text``.
    """
    if not verdicts:
        raise LengthMismatch("no verdicts to rewrite")
    registry = registry or default_registry()
    if task.paragraph_level:
        if candidate_text is None:
            candidate_text = verdicts[0].sentence
        user_text = registry.render(
            "rai_paragraph",
            {
                "article": reference,
                "summary": candidate_text,
                "reason": "\n".join(v.reason for v in verdicts),
            },
        )
        parts = _complete_and_parse(backend, settings, user_text, parse_rai_response)
        if len(parts) != 1:
            raise LengthMismatch(
                f"improver returned {len(parts)} rewrites for one paragraph"
            )
        rewrite = _build_rewrite(parts[0], candidate_text)
        if all(v.polarity == 1 for v in verdicts):
            rewrite = replace(rewrite, improved=candidate_text)
        return [rewrite]

    payload = json.dumps(
        [{"sentence": v.sentence, "reason": v.reason} for v in verdicts],
        ensure_ascii=False,
        indent=2,
    )
    user_text = registry.render(
        "rai_sentence", {"article": reference, "sentences": payload}
    )
    parts = _complete_and_parse(backend, settings, user_text, parse_rai_response)
    if len(parts) != len(verdicts):
        raise LengthMismatch(
            f"improver returned {len(parts)} rewrites for {len(verdicts)} sentences"
        )
    rewrites = []
    for part, verdict in zip(parts, verdicts):
        rewrite = _build_rewrite(part, verdict.sentence)
        if verdict.polarity == 1 and rewrite.improved != verdict.sentence:
            log.debug("improver altered a consistent sentence; restoring original")
            rewrite = replace(rewrite, improved=verdict.sentence)
        rewrites.append(rewrite)
    return rewrites
