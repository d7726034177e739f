"""Bundled demo dataset plus a fully scripted backend for offline runs.

Ten summarization items with hand-designed two-round traces: items 1-6 score
1.0 immediately, items 7-9 start inconsistent (0.5, 1/3, 0.0) and are
corrected in round two, item 10 starts at 0.0 and only reaches 0.5. The
scripted responses key on unique substrings of each rendered prompt, so the
demo exercises the real prompt/parse/loop machinery with zero network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .gateway import MockBackend, make_mock
from .model import EvaluationItem

DATASET_RESOURCE = "demo_items.jsonl"


@dataclass(frozen=True)
class DemoRound:
    sentences: tuple[str, ...]
    reasons: tuple[str, ...]
    marks: tuple[int, ...]
    improved: tuple[str, ...] | None  # None on the final scripted round


@dataclass(frozen=True)
class DemoItem:
    item_id: str
    reference: str
    label: float
    rounds: tuple[DemoRound, ...]

    @property
    def candidate(self) -> str:
        return " ".join(self.rounds[0].sentences)


def _consistent(detail: str) -> str:
    return f"This sentence is consistent with the article. {detail}"


def _inconsistent(detail: str) -> str:
    return f"This sentence is not consistent with the article. {detail}"


DEMO_ITEMS: tuple[DemoItem, ...] = (
    DemoItem(
        item_id="demo-01",
        reference=(
            "The museum opened a new wing on Saturday. The mayor cut the ribbon "
            "before a crowd of hundreds. Admission was free for the whole weekend."
        ),
        label=1,
        rounds=(
            DemoRound(
                sentences=(
                    "The museum opened a new wing on Saturday.",
                    "Admission was free all weekend.",
                ),
                reasons=(
                    _consistent("The article states the museum opened a new wing on Saturday."),
                    _consistent("The article says admission was free for the whole weekend."),
                ),
                marks=(1, 1),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-02",
        reference=(
            "Engineers finished the harbor bridge repairs two weeks early. "
            "The crossing reopened to trucks on Monday morning."
        ),
        label=1,
        rounds=(
            DemoRound(
                sentences=(
                    "The harbor bridge repairs finished two weeks early.",
                    "Trucks could cross again on Monday morning.",
                ),
                reasons=(
                    _consistent(
                        "The article states engineers finished the harbor bridge repairs two weeks early."
                    ),
                    _consistent("The article says the crossing reopened to trucks on Monday morning."),
                ),
                marks=(1, 1),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-03",
        reference=(
            "The city library extended its opening hours to nine in the evening. "
            "Students pushed for the change during exam season."
        ),
        label=0,
        rounds=(
            DemoRound(
                sentences=(
                    "The library now stays open until nine in the evening.",
                    "Students had pushed for longer hours during exams.",
                ),
                reasons=(
                    _consistent(
                        "The article states the library extended its hours to nine in the evening."
                    ),
                    _consistent("The article says students pushed for the change during exam season."),
                ),
                marks=(1, 1),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-04",
        reference=(
            "A bakery on Elm Street won the regional pastry contest. "
            "The judges praised its almond croissants."
        ),
        label=1,
        rounds=(
            DemoRound(
                sentences=("The Elm Street bakery won the regional pastry contest.",),
                reasons=(
                    _consistent(
                        "The article states the bakery on Elm Street won the regional pastry contest."
                    ),
                ),
                marks=(1,),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-05",
        reference=(
            "The valley orchard reported a record apple harvest this autumn. "
            "Pickers worked extra shifts through October."
        ),
        label=1,
        rounds=(
            DemoRound(
                sentences=(
                    "The orchard reported a record apple harvest this autumn.",
                    "Pickers worked extra shifts through October.",
                ),
                reasons=(
                    _consistent("The article reports a record apple harvest this autumn."),
                    _consistent("The article says pickers worked extra shifts through October."),
                ),
                marks=(1, 1),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-06",
        reference=(
            "The chess club meets every Thursday in the community hall. "
            "New members are welcome without fees."
        ),
        label=1,
        rounds=(
            DemoRound(
                sentences=(
                    "The chess club meets on Thursdays in the community hall.",
                    "Joining is free for new members.",
                ),
                reasons=(
                    _consistent(
                        "The article states the chess club meets every Thursday in the community hall."
                    ),
                    _consistent("The article says new members are welcome without fees."),
                ),
                marks=(1, 1),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-07",
        reference=(
            "The ferry service added a late crossing on Friday nights. "
            "The harbor master said demand rose after the festival season."
        ),
        label=0,
        rounds=(
            DemoRound(
                sentences=(
                    "The ferry service cancelled its late crossing on Friday nights.",
                    "The harbor master said demand rose after the festival season.",
                ),
                reasons=(
                    _inconsistent(
                        "The article states the ferry service added a late crossing on "
                        "Friday nights rather than cancelling it."
                    ),
                    _consistent(
                        "The article quotes the harbor master saying demand rose after the festival season."
                    ),
                ),
                marks=(-1, 1),
                improved=(
                    "The ferry service added a late crossing on Friday nights.",
                    "The harbor master said demand rose after the festival season.",
                ),
            ),
            DemoRound(
                sentences=(
                    "The ferry service added a late crossing on Friday nights.",
                    "The harbor master said demand rose after the festival season.",
                ),
                reasons=(
                    _consistent(
                        "The article confirms the ferry service added a late crossing on Friday nights."
                    ),
                    _consistent(
                        "The harbor master is quoted on demand rising after the festival season."
                    ),
                ),
                marks=(1, 1),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-08",
        reference=(
            "The observatory installed a new radio telescope in March. "
            "Funding came from a national science grant. "
            "Local schools may book guided tours."
        ),
        label=0,
        rounds=(
            DemoRound(
                sentences=(
                    "The observatory installed a new optical telescope in March.",
                    "Funding came from private donors.",
                    "Local schools may book guided tours.",
                ),
                reasons=(
                    _inconsistent(
                        "The article says the telescope is a radio telescope, not an optical one."
                    ),
                    _inconsistent(
                        "The article states funding came from a national science grant, not private donors."
                    ),
                    _consistent("The article mentions local schools may book guided tours."),
                ),
                marks=(-1, -1, 1),
                improved=(
                    "The observatory installed a new radio telescope in March.",
                    "Funding came from a national science grant.",
                    "Local schools may book guided tours.",
                ),
            ),
            DemoRound(
                sentences=(
                    "The observatory installed a new radio telescope in March.",
                    "Funding came from a national science grant.",
                    "Local schools may book guided tours.",
                ),
                reasons=(
                    _consistent(
                        "The article confirms the observatory installed a new radio telescope in March."
                    ),
                    _consistent("The article confirms the funding came from a national science grant."),
                    _consistent("The guided tours for local schools match the article."),
                ),
                marks=(1, 1, 1),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-09",
        reference="The marathon route will pass the old mill before finishing at the stadium.",
        label=0,
        rounds=(
            DemoRound(
                sentences=("The marathon route will skip the old mill and finish at the harbor.",),
                reasons=(
                    _inconsistent(
                        "The article says the route passes the old mill and finishes at the "
                        "stadium, not the harbor."
                    ),
                ),
                marks=(-1,),
                improved=(
                    "The marathon route will pass the old mill before finishing at the stadium.",
                ),
            ),
            DemoRound(
                sentences=(
                    "The marathon route will pass the old mill before finishing at the stadium.",
                ),
                reasons=(
                    _consistent(
                        "The route matches the article, passing the old mill and finishing at the stadium."
                    ),
                ),
                marks=(1,),
                improved=None,
            ),
        ),
    ),
    DemoItem(
        item_id="demo-10",
        reference=(
            "The festival begins on the first Friday of June. "
            "Tickets go on sale at the town hall in May."
        ),
        label=0,
        rounds=(
            DemoRound(
                sentences=(
                    "The festival begins on the last Friday of July.",
                    "Tickets go on sale online in April.",
                ),
                reasons=(
                    _inconsistent(
                        "The article says the festival begins on the first Friday of June, "
                        "not the last Friday of July."
                    ),
                    _inconsistent(
                        "The article says tickets go on sale at the town hall in May, "
                        "not online in April."
                    ),
                ),
                marks=(-1, -1),
                improved=(
                    "The festival begins on the first Friday of June.",
                    "Tickets go on sale online in May.",
                ),
            ),
            DemoRound(
                sentences=(
                    "The festival begins on the first Friday of June.",
                    "Tickets go on sale online in May.",
                ),
                reasons=(
                    _consistent("The festival start date now matches the article."),
                    _inconsistent(
                        "The article says tickets go on sale at the town hall, not online."
                    ),
                ),
                marks=(1, -1),
                improved=None,
            ),
        ),
    ),
)


def demo_items() -> list[EvaluationItem]:
    return [
        EvaluationItem(
            item_id=item.item_id,
            reference=item.reference,
            candidate=item.candidate,
            human_label=item.label,
            binary_label=False,
        )
        for item in DEMO_ITEMS
    ]


def demo_dataset_jsonl() -> str:
    """The bundled dataset file content, derived from the same definitions."""
    lines = []
    for item in DEMO_ITEMS:
        lines.append(
            json.dumps(
                {
                    "item_id": item.item_id,
                    "reference": item.reference,
                    "candidate": item.candidate,
                    "label": item.label,
                },
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + "\n"


def demo_dataset_path() -> str:
    """Filesystem path of the bundled JSONL dataset."""
    return str(resources.files(__package__).joinpath("fixtures_data", DATASET_RESOURCE))


def _dce_response(round_: DemoRound) -> str:
    entries = [
        {"sentence": sentence, "reason": reason}
        for sentence, reason in zip(round_.sentences, round_.reasons)
    ]
    return json.dumps(
        {"reason": entries, "is_consistent": all(m == 1 for m in round_.marks)},
        ensure_ascii=False,
    )


def _amc_response(round_: DemoRound) -> str:
    rationale = [
        f"Paragraph {i + 1} is {'positive' if mark == 1 else 'negative'}. Thus mark {mark}"
        for i, mark in enumerate(round_.marks)
    ]
    return json.dumps({"reason": rationale, "answer": list(round_.marks)})


def _rai_response(round_: DemoRound) -> str:
    assert round_.improved is not None
    entries = []
    for sentence, mark, improved in zip(round_.sentences, round_.marks, round_.improved):
        if mark == 1:
            entries.append(
                {
                    "sentence": sentence,
                    "improved_sentence": sentence,
                    "reason": "ALREADY CONSISTENT",
                }
            )
        else:
            entries.append(
                {
                    "sentence": sentence,
                    "improved_sentence": improved,
                    "reason": "Rewritten to match the article.",
                }
            )
    return json.dumps(entries, ensure_ascii=False)


def demo_script() -> dict[str, str]:
    """Scripted responses keyed on unique substrings of the rendered prompts."""
    script: dict[str, str] = {}
    for item in DEMO_ITEMS:
        for round_ in item.rounds:
            candidate = " ".join(round_.sentences)
            first_reason = round_.reasons[0]
            script[f"## Summary ##\n{candidate}\n"] = _dce_response(round_)
            script[f'*"{first_reason}"'] = _amc_response(round_)
            if round_.improved is not None:
                script[f'"reason": "{first_reason}"'] = _rai_response(round_)
    return script


def demo_backend(latency_s: float = 0.0) -> MockBackend:
    return make_mock(demo_script(), latency_s=latency_s)
