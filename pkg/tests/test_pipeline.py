import json

import pytest

from dcr import fixtures
from dcr.errors import Aborted
from dcr.gateway import GenerationSettings, make_mock
from dcr.model import EvaluationItem, TaskKind
from dcr.pipeline import PipelineConfig, run_batch, run_item

SETTINGS = GenerationSettings(max_retries=0)

TASK = TaskKind.SUMMARIZATION_CONSISTENCY


def _dce(sentences, reasons, consistent):
    return json.dumps(
        {
            "reason": [{"sentence": s, "reason": r} for s, r in zip(sentences, reasons)],
            "is_consistent": consistent,
        }
    )


def _amc(marks):
    return json.dumps({"reason": ["x"] * len(marks), "answer": list(marks)})


def _rai(entries):
    return json.dumps(
        [
            {"sentence": s, "improved_sentence": improved, "reason": why}
            for s, improved, why in entries
        ]
    )


@pytest.fixture
def two_round_item():
    """Round 1 marks [-1, +1] -> 0.5; rewrite fixes s1; round 2 -> 1.0."""
    item = EvaluationItem(
        "i1",
        reference="Alpha is blue. Beta is green.",
        candidate="Alpha is red. Beta is green.",
    )
    r1_sentences = ["Alpha is red.", "Beta is green."]
    r1_reasons = [
        "This sentence is not consistent with the article. Alpha is blue, not red.",
        "This sentence is consistent with the article. Beta is green.",
    ]
    r2_sentences = ["Alpha is blue.", "Beta is green."]
    r2_reasons = [
        "This sentence is consistent with the article. Alpha is blue now.",
        "This sentence is consistent with the article. Beta is still green.",
    ]
    script = {
        "## Summary ##\nAlpha is red. Beta is green.\n": _dce(r1_sentences, r1_reasons, False),
        "## Summary ##\nAlpha is blue. Beta is green.\n": _dce(r2_sentences, r2_reasons, True),
        f'*"{r1_reasons[0]}"': _amc([-1, 1]),
        f'*"{r2_reasons[0]}"': _amc([1, 1]),
        f'"reason": "{r1_reasons[0]}"': _rai(
            [
                ("Alpha is red.", "Alpha is blue.", "Color corrected."),
                ("Beta is green.", "Beta is green.", "ALREADY CONSISTENT"),
            ]
        ),
    }
    return item, make_mock(script)


def test_two_round_trace_scores(two_round_item):
    item, backend = two_round_item
    cfg = PipelineConfig(task=TASK, max_rounds=3, improve=True)
    records = run_item(item, cfg, backend, SETTINGS)
    assert [r.score.final for r in records] == [0.5, 1.0]
    assert [r.round_index for r in records] == [1, 2]
    assert records[0].converged is False
    assert records[1].converged is True
    assert records[0].rewrites[0].improved == "Alpha is blue."
    assert records[1].rewrites == ()


def test_round_scores_nondecreasing(two_round_item):
    item, backend = two_round_item
    cfg = PipelineConfig(task=TASK, max_rounds=3, improve=True)
    records = run_item(item, cfg, backend, SETTINGS)
    finals = [r.score.final for r in records]
    assert finals == sorted(finals)


def test_already_consistent_no_rai_call():
    item = EvaluationItem("i1", "Gamma is tall.", "Gamma is tall.")
    reason = "This sentence is consistent with the article. Height matches."
    backend = make_mock(
        {
            "## Summary ##\nGamma is tall.\n": _dce(["Gamma is tall."], [reason], True),
            f'*"{reason}"': _amc([1]),
        }
    )
    cfg = PipelineConfig(task=TASK, max_rounds=5, improve=True)
    records = run_item(item, cfg, backend, SETTINGS)
    assert len(records) == 1
    assert records[0].score.final == 1.0
    assert records[0].converged is True
    assert not any("good writer" in c.user_text for c in backend.calls)


def test_max_rounds_one_improve_stops_without_rai(two_round_item):
    item, backend = two_round_item
    cfg = PipelineConfig(task=TASK, max_rounds=1, improve=True)
    records = run_item(item, cfg, backend, SETTINGS)
    assert len(records) == 1
    assert records[0].converged is False
    assert records[0].rewrites == ()
    assert not any("good writer" in c.user_text for c in backend.calls)


def test_evaluate_only_requires_single_round():
    with pytest.raises(ValueError):
        PipelineConfig(task=TASK, max_rounds=2, improve=False)


def test_evaluate_only_single_record(two_round_item):
    item, backend = two_round_item
    cfg = PipelineConfig(task=TASK, max_rounds=1, improve=False)
    records = run_item(item, cfg, backend, SETTINGS)
    assert len(records) == 1
    assert records[0].score.final == 0.5


def test_paragraph_task_two_rounds():
    item = EvaluationItem("p1", "The play opens in spring.", "The play opens in winter.")
    r1_reason = "This summary is not consistent with the article. Wrong season."
    r2_reason = "This summary is consistent with the article. Season fixed."
    backend = make_mock(
        {
            "## Summary ##\nThe play opens in winter.\n": json.dumps(
                {
                    "reason": {"sentence": "The play opens in winter.", "reason": r1_reason},
                    "is_consistent": False,
                }
            ),
            "## Summary ##\nThe play opens in spring.\n": json.dumps(
                {
                    "reason": {"sentence": "The play opens in spring.", "reason": r2_reason},
                    "is_consistent": True,
                }
            ),
            f'*"{r1_reason}"': _amc([-1]),
            f'*"{r2_reason}"': _amc([1]),
            f"Reason\n{r1_reason}": json.dumps(
                {
                    "sentence": "The play opens in winter.",
                    "improved_summary": "The play opens in spring.",
                    "reason": "Season corrected.",
                }
            ),
        }
    )
    cfg = PipelineConfig(
        task=TaskKind.PARAGRAPH_LEVEL_CONSISTENCY, max_rounds=2, improve=True
    )
    records = run_item(item, cfg, backend, SETTINGS)
    assert [r.score.final for r in records] == [0.0, 1.0]
    assert records[1].converged is True


# --- batch -----------------------------------------------------------------


def _demo_cfg(workers=1, fail_policy="skip"):
    return PipelineConfig(
        task=TASK, max_rounds=2, improve=True, worker_count=workers, fail_policy=fail_policy
    )


def test_batch_output_order_matches_input_order():
    items = fixtures.demo_items()
    serial = run_batch(items, _demo_cfg(workers=1), fixtures.demo_backend(), SETTINGS)
    parallel = run_batch(items, _demo_cfg(workers=4), fixtures.demo_backend(), SETTINGS)
    assert [r.item_id for r in serial.per_item] == [i.item_id for i in items]
    assert [r.item_id for r in parallel.per_item] == [i.item_id for i in items]
    assert [(r.item_id, r.final_score, len(r.rounds)) for r in serial.per_item] == [
        (r.item_id, r.final_score, len(r.rounds)) for r in parallel.per_item
    ]
    assert serial.per_item == parallel.per_item


def test_batch_parallel_speedup_with_latency():
    items = fixtures.demo_items()[:8]
    serial = run_batch(
        items, _demo_cfg(workers=1), fixtures.demo_backend(latency_s=0.02), SETTINGS
    )
    parallel = run_batch(
        items, _demo_cfg(workers=4), fixtures.demo_backend(latency_s=0.02), SETTINGS
    )
    assert parallel.timing.total_s < serial.timing.total_s * 0.7
    assert len(parallel.timing.per_item_s) == 8


def test_batch_empty_items():
    report = run_batch([], _demo_cfg(), fixtures.demo_backend(), SETTINGS)
    assert report.per_item == ()
    assert report.timing.total_s == 0.0


def test_batch_skip_isolates_failures():
    items = fixtures.demo_items()
    broken = EvaluationItem("broken-1", "some reference", "unscripted candidate text.")
    mixed = items[:3] + [broken] + items[3:]
    report = run_batch(mixed, _demo_cfg(workers=4), fixtures.demo_backend(), SETTINGS)
    assert [r.item_id for r in report.per_item] == [i.item_id for i in items]
    assert len(report.failures) == 1
    assert report.failures[0][0] == "broken-1"
    clean = run_batch(items, _demo_cfg(workers=4), fixtures.demo_backend(), SETTINGS)
    assert report.per_item == clean.per_item


def test_batch_abort_raises():
    items = fixtures.demo_items()[:2]
    broken = EvaluationItem("broken-1", "ref", "unscripted candidate text.")
    with pytest.raises(Aborted):
        run_batch(
            [broken] + items,
            _demo_cfg(fail_policy="abort"),
            fixtures.demo_backend(),
            SETTINGS,
        )


def test_progress_log_lines(tmp_path):
    items = fixtures.demo_items()[:3]
    path = tmp_path / "run" / "progress.jsonl"
    run_batch(
        items,
        _demo_cfg(workers=2),
        fixtures.demo_backend(),
        SETTINGS,
        progress_path=path,
    )
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == 3
    assert {line["item_id"] for line in lines} == {i.item_id for i in items}
    for line in lines:
        assert set(line) == {"item_id", "rounds", "final", "seconds"}
        assert line["seconds"] >= 0.0


def test_round_record_count_never_exceeds_max_rounds():
    items = fixtures.demo_items()
    report = run_batch(items, _demo_cfg(), fixtures.demo_backend(), SETTINGS)
    assert all(len(r.rounds) <= 2 for r in report.per_item)
