"""Prompt template registry and renderer.

Templates are plain UTF-8 text files with ``{{name}}`` placeholder markers,
one file per template id (``<template_id>.txt``). The defaults ship with the
package; pass ``prompt_dir`` to load task-customized copies instead, no
recompile needed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import MissingPlaceholder, UnknownTemplate

TEMPLATE_IDS = (
    "dce_semantic",
    "dce_summarization",
    "dce_paragraph",
    "amc",
    "rai_sentence",
    "rai_paragraph",
)

REQUIRED_PLACEHOLDERS: dict[str, frozenset[str]] = {
    "dce_semantic": frozenset({"true_answer", "answer_to_evaluate"}),
    "dce_summarization": frozenset({"article", "summary"}),
    "dce_paragraph": frozenset({"article", "summary"}),
    "amc": frozenset({"attempt_answer"}),
    "rai_sentence": frozenset({"article", "sentences"}),
    "rai_paragraph": frozenset({"article", "summary", "reason"}),
}

_PLACEHOLDER_RE = re.compile(r"\{\{([a-zA-Z_][a-zA-Z0-9_]*)\}\}")


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str
    required_placeholders: frozenset[str]

    def __post_init__(self) -> None:
        present = set(_PLACEHOLDER_RE.findall(self.body))
        missing = self.required_placeholders - present
        if missing:
            raise ValueError(
                f"template {self.template_id!r} body lacks required "
                f"placeholders {sorted(missing)}"
            )


class PromptRegistry:
    """Immutable mapping of template id to template, loaded once at startup."""

    def __init__(self, templates: dict[str, PromptTemplate]):
        self._templates = dict(templates)

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise UnknownTemplate(template_id) from None

    def render(self, template_id: str, values: dict[str, str]) -> str:
        """Substitute placeholders verbatim; no escaping, no reflow.

        Raises ``MissingPlaceholder`` when ``values`` does not cover every
        required placeholder, and refuses to leave unresolved markers behind.
        """
        template = self.get(template_id)
        missing = template.required_placeholders - values.keys()
        if missing:
            raise MissingPlaceholder(missing)

        def substitute(match: re.Match[str]) -> str:
            name = match.group(1)
            if name not in values:
                raise MissingPlaceholder({name})
            return values[name]

        return _PLACEHOLDER_RE.sub(substitute, template.body)


def _read_default(template_id: str) -> str:
    return (
        resources.files(__package__).joinpath(f"{template_id}.txt").read_text("utf-8")
    )


def load_registry(prompt_dir: str | Path | None = None) -> PromptRegistry:
    """Load all templates, from ``prompt_dir`` when given, else the defaults."""
    templates = {}
    for template_id in TEMPLATE_IDS:
        if prompt_dir is not None:
            body = Path(prompt_dir, f"{template_id}.txt").read_text("utf-8")
        else:
            body = _read_default(template_id)
        templates[template_id] = PromptTemplate(
            template_id=template_id,
            body=body,
            required_placeholders=REQUIRED_PLACEHOLDERS[template_id],
        )
    return PromptRegistry(templates)


_default_registry: PromptRegistry | None = None


def default_registry() -> PromptRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = load_registry()
    return _default_registry


def render(template_id: str, values: dict[str, str]) -> str:
    """Render against the shipped default templates."""
    return default_registry().render(template_id, values)
