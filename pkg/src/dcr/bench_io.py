"""Dataset ingestion, report emission, and JSON serialization of run state.

Input datasets are JSON Lines (one object per line) or TSV with a header
row. Output is a self-describing run directory: ``report.json`` (everything),
``summary.csv`` (one row per aggregate metric), ``per_item.csv``, and
``plotdata/*.csv`` with score-histogram bins per round and a
threads-vs-seconds row. CSV files use a period decimal separator, UTF-8 and
LF line endings so golden-file comparisons are bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from . import stats
from .errors import (
    DcrError,
    DegenerateSeries,
    EmptyDataset,
    FileMissing,
    IoError,
    NoInconsistent,
    SchemaMismatch,
    SingleClass,
)
from .model import (
    Classification,
    ConsistencyScore,
    Correlations,
    EvaluationItem,
    ImprovementStats,
    ItemResult,
    RoundRecord,
    RunReport,
    SentenceRewrite,
    SentenceVerdict,
    Timing,
    validate_item,
)

FAMILIES = ("qqp", "paws", "summeval", "qags_cnn", "qags_xsum", "generic_pairs")
_BINARY_FAMILIES = {"qqp", "paws"}

HISTOGRAM_BINS = 10


@dataclass(frozen=True)
class DatasetSpec:
    """Where a benchmark file lives and how its columns map onto items.

    ``field_map`` maps source column names to one of ``reference``,
    ``candidate`` or ``label`` and overrides the family defaults.
    """

    family: str
    path: str
    limit: int | None = None
    field_map: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.limit is not None and self.limit < 1:
            raise ValueError("limit must be >= 1")


# Per-family candidate column names, tried in order.
_FAMILY_FIELDS: dict[str, dict[str, tuple[str, ...]]] = {
    "qqp": {
        "reference": ("question1",),
        "candidate": ("question2",),
        "label": ("is_duplicate", "label"),
    },
    "paws": {
        "reference": ("question1", "sentence1"),
        "candidate": ("question2", "sentence2"),
        "label": ("label", "is_duplicate"),
    },
    "summeval": {
        "reference": ("source", "article", "document", "text"),
        "candidate": ("decoded", "summary", "machine_summary", "candidate"),
        "label": ("consistency", "label", "score"),
    },
    "qags_cnn": {
        "reference": ("article", "source", "document", "text"),
        "candidate": ("summary", "sentence", "claim", "candidate"),
        "label": ("label", "score", "consistency"),
    },
    "qags_xsum": {
        "reference": ("article", "source", "document", "text"),
        "candidate": ("summary", "sentence", "claim", "candidate"),
        "label": ("label", "score", "consistency"),
    },
    "generic_pairs": {
        "reference": ("reference",),
        "candidate": ("candidate",),
        "label": ("label", "score"),
    },
}


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _coerce_label(value: object) -> float | None:
    """Turn a raw label cell into one number; rating lists are averaged."""
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        return float(value)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return float(value)
    if isinstance(value, list) and value:
        parts = []
        for v in value:
            if isinstance(v, dict):
                if "consistency" not in v:
                    raise ValueError(f"annotation object lacks 'consistency': {v!r}")
                parts.append(float(v["consistency"]))
            else:
                parts.append(float(v))
        return _mean(parts)
    raise ValueError(f"cannot interpret label value {value!r}")


def _rows_from_file(path: Path) -> Iterable[tuple[int, dict]]:
    """Yield (line_number, row_dict) from a JSONL or TSV-with-header file."""
    lines = path.read_text(encoding="utf-8").splitlines()
    first_index = next((i for i, line in enumerate(lines) if line.strip()), None)
    if first_index is None:
        return
    if lines[first_index].lstrip().startswith("{"):
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                yield number, json.loads(line)
            except ValueError as exc:
                raise SchemaMismatch(f"invalid JSON: {exc}", number) from exc
    else:
        reader = csv.DictReader(lines[first_index:], delimiter="\t")
        for offset, row in enumerate(reader):
            yield first_index + 2 + offset, dict(row)


def _pick(row: dict, names: tuple[str, ...]) -> object | None:
    for name in names:
        if name in row and row[name] is not None:
            return row[name]
    return None


def load_dataset(spec: DatasetSpec) -> list[EvaluationItem]:
    """Read a dataset file into validated items, in file order."""
    path = Path(spec.path)
    if not path.exists():
        raise FileMissing(f"dataset file not found: {spec.path}")

    fields = dict(_FAMILY_FIELDS[spec.family])
    if spec.field_map:
        overrides: dict[str, tuple[str, ...]] = {}
        for source, role in spec.field_map.items():
            if role not in ("reference", "candidate", "label"):
                raise ValueError(f"field_map role must be reference/candidate/label, got {role!r}")
            overrides[role] = overrides.get(role, ()) + (source,)
        fields.update(overrides)

    binary = spec.family in _BINARY_FAMILIES
    items: list[EvaluationItem] = []
    for number, row in _rows_from_file(path):
        reference = _pick(row, fields["reference"])
        candidate = _pick(row, fields["candidate"])
        if reference is None:
            raise SchemaMismatch(
                f"no reference column among {fields['reference']}", number
            )
        if candidate is None:
            raise SchemaMismatch(
                f"no candidate column among {fields['candidate']}", number
            )
        try:
            label = _coerce_label(_pick(row, fields["label"]))
        except ValueError as exc:
            raise SchemaMismatch(str(exc), number) from exc
        item_id = str(row.get("item_id", row.get("id", f"{spec.family}-{number:06d}")))
        item = EvaluationItem(
            item_id=item_id,
            reference=str(reference),
            candidate=str(candidate),
            human_label=label,
            binary_label=binary,
        )
        try:
            validate_item(item)
        except DcrError as exc:
            raise SchemaMismatch(str(exc), number) from exc
        items.append(item)
        if spec.limit is not None and len(items) >= spec.limit:
            break
    if not items:
        raise EmptyDataset(f"no items in {spec.path}")
    return items


# --- JSON forms -----------------------------------------------------------


def item_to_dict(item: EvaluationItem) -> dict:
    return {
        "item_id": item.item_id,
        "reference": item.reference,
        "candidate": item.candidate,
        "label": item.human_label,
        "binary_label": item.binary_label,
    }


def item_from_dict(d: dict) -> EvaluationItem:
    return EvaluationItem(
        item_id=d["item_id"],
        reference=d["reference"],
        candidate=d["candidate"],
        human_label=d.get("label"),
        binary_label=bool(d.get("binary_label", False)),
    )


def verdict_to_dict(v: SentenceVerdict) -> dict:
    return {
        "sentence": v.sentence,
        "reason": v.reason,
        "polarity": v.polarity,
        "sentence_level": v.sentence_level,
    }


def verdict_from_dict(d: dict) -> SentenceVerdict:
    return SentenceVerdict(
        sentence=d["sentence"],
        reason=d["reason"],
        polarity=d.get("polarity"),
        sentence_level=bool(d.get("sentence_level", True)),
    )


def score_to_dict(s: ConsistencyScore) -> dict:
    return {
        "z": list(s.z),
        "alpha": s.alpha,
        "beta": s.beta,
        "k": s.k,
        "raw": s.raw,
        "final": s.final,
    }


def score_from_dict(d: dict) -> ConsistencyScore:
    return ConsistencyScore(
        z=tuple(int(v) for v in d["z"]),
        alpha=float(d["alpha"]),
        beta=float(d["beta"]),
        k=int(d["k"]),
        raw=float(d["raw"]),
        final=float(d["final"]),
    )


def round_to_dict(r: RoundRecord) -> dict:
    return {
        "round_index": r.round_index,
        "verdicts": [verdict_to_dict(v) for v in r.verdicts],
        "score": score_to_dict(r.score),
        "rewrites": [
            {"original": rw.original, "improved": rw.improved, "reason": rw.reason}
            for rw in r.rewrites
        ],
        "converged": r.converged,
    }


def round_from_dict(d: dict) -> RoundRecord:
    return RoundRecord(
        round_index=int(d["round_index"]),
        verdicts=tuple(verdict_from_dict(v) for v in d["verdicts"]),
        score=score_from_dict(d["score"]),
        rewrites=tuple(
            SentenceRewrite(rw["original"], rw["improved"], rw["reason"])
            for rw in d["rewrites"]
        ),
        converged=bool(d["converged"]),
    )


def item_result_to_dict(r: ItemResult) -> dict:
    return {
        "item_id": r.item_id,
        "final_score": r.final_score,
        "human_label": r.human_label,
        "rounds": [round_to_dict(record) for record in r.rounds],
    }


def item_result_from_dict(d: dict) -> ItemResult:
    return ItemResult(
        item_id=d["item_id"],
        final_score=float(d["final_score"]),
        rounds=tuple(round_from_dict(r) for r in d["rounds"]),
        human_label=d.get("human_label"),
    )


def report_to_dict(report: RunReport) -> dict:
    return {
        "per_item": [item_result_to_dict(r) for r in report.per_item],
        "correlations": (
            None
            if report.correlations is None
            else {
                "pearson": report.correlations.pearson,
                "spearman": report.correlations.spearman,
                "kendall_tau": report.correlations.kendall_tau,
            }
        ),
        "auroc": report.auroc,
        "classification": (
            None
            if report.classification is None
            else {
                "f1": report.classification.f1,
                "precision": report.classification.precision,
                "recall": report.classification.recall,
            }
        ),
        "improvement": (
            None
            if report.improvement is None
            else {
                "inconsistent_count": report.improvement.inconsistent_count,
                "corrected_count": report.improvement.corrected_count,
                "rate": report.improvement.rate,
            }
        ),
        "timing": {
            "total_s": report.timing.total_s,
            "per_item_s": [[item_id, s] for item_id, s in report.timing.per_item_s],
        },
        "config_echo": {key: value for key, value in report.config_echo},
        "failures": [{"item_id": i, "error": e} for i, e in report.failures],
    }


def report_from_dict(d: dict) -> RunReport:
    correlations = d.get("correlations")
    classification = d.get("classification")
    improvement = d.get("improvement")
    timing = d.get("timing", {"total_s": 0.0, "per_item_s": {}})
    return RunReport(
        per_item=tuple(item_result_from_dict(r) for r in d["per_item"]),
        correlations=(
            None
            if correlations is None
            else Correlations(
                pearson=correlations["pearson"],
                spearman=correlations["spearman"],
                kendall_tau=correlations["kendall_tau"],
            )
        ),
        auroc=d.get("auroc"),
        classification=(
            None
            if classification is None
            else Classification(
                f1=classification["f1"],
                precision=classification["precision"],
                recall=classification["recall"],
            )
        ),
        improvement=(
            None
            if improvement is None
            else ImprovementStats(
                inconsistent_count=improvement["inconsistent_count"],
                corrected_count=improvement["corrected_count"],
                rate=improvement["rate"],
            )
        ),
        timing=Timing(
            total_s=float(timing["total_s"]),
            per_item_s=tuple(
                (item_id, float(s)) for item_id, s in timing["per_item_s"]
            ),
        ),
        config_echo=tuple((k, v) for k, v in d.get("config_echo", {}).items()),
        failures=tuple((f["item_id"], f["error"]) for f in d.get("failures", [])),
    )


# --- aggregates -------------------------------------------------------------


def fill_aggregates(report: RunReport) -> RunReport:
    """Compute correlations/AUROC/classification/improvement from per-item data.

    Predicted scores are each item's first-round score (the evaluator's
    judgment before any rewriting); trajectories feed the improvement rate.
    A metric that is undefined for the data at hand stays None.
    """
    labeled = [
        (r.initial_score, float(r.human_label))
        for r in report.per_item
        if r.human_label is not None and r.rounds
    ]
    correlations = None
    auroc_value = None
    classification = None
    if len(labeled) >= 2:
        series = stats.paired([s for s, _ in labeled], [t for _, t in labeled])

        def _try(fn) -> float | None:
            try:
                return fn(series)
            except DegenerateSeries:
                return None

        correlations = Correlations(
            pearson=_try(stats.pearson),
            spearman=_try(stats.spearman),
            kendall_tau=_try(stats.kendall_tau),
        )
        if all(t in (0.0, 1.0) for _, t in labeled):
            try:
                auroc_value = stats.auroc(
                    [s for s, _ in labeled], [t for _, t in labeled]
                )
            except SingleClass:
                auroc_value = None
            predicted = [1 if s == 1.0 else 0 for s, _ in labeled]
            classification = stats.prf(
                predicted, [int(t) for _, t in labeled], positive_class=1
            )

    config = {key: value for key, value in report.config_echo}
    if "improve" in config:
        improve_run = config["improve"] == "true"
    else:
        improve_run = any(len(r.rounds) > 1 for r in report.per_item)
    improvement = None
    if improve_run:
        try:
            improvement = stats.improvement_stats([r.rounds for r in report.per_item])
        except NoInconsistent:
            improvement = ImprovementStats(0, 0, None)

    return replace(
        report,
        correlations=correlations,
        auroc=auroc_value,
        classification=classification,
        improvement=improvement,
    )


# --- report files -----------------------------------------------------------


def _format_value(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def score_histogram(report: RunReport, bins: int = HISTOGRAM_BINS) -> list[list[int]]:
    """Per-round histogram of scores; items keep their last score after converging."""
    max_rounds = max((len(r.rounds) for r in report.per_item), default=0)
    counts = [[0] * bins for _ in range(max_rounds)]
    for result in report.per_item:
        for round_index in range(max_rounds):
            records = result.rounds
            record = records[min(round_index, len(records) - 1)]
            score = record.score.final
            bin_index = min(int(score * bins), bins - 1)
            counts[round_index][bin_index] += 1
    return counts


def write_report(report: RunReport, out_dir: str | Path) -> list[Path]:
    """Write report.json, summary.csv, per_item.csv and plotdata/*.csv."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "plotdata").mkdir(exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create run directory {out}: {exc}") from exc

    written: list[Path] = []

    def _write_text(path: Path, text: str) -> None:
        try:
            path.write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    _write_text(
        out / "report.json",
        json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n",
    )

    summary_rows = [("items", str(len(report.per_item)))]
    if report.correlations is not None:
        summary_rows += [
            ("pearson", _format_value(report.correlations.pearson)),
            ("spearman", _format_value(report.correlations.spearman)),
            ("kendall_tau", _format_value(report.correlations.kendall_tau)),
        ]
    if report.auroc is not None:
        summary_rows.append(("auroc", _format_value(report.auroc)))
    if report.classification is not None:
        summary_rows += [
            ("f1", _format_value(report.classification.f1)),
            ("precision", _format_value(report.classification.precision)),
            ("recall", _format_value(report.classification.recall)),
        ]
    if report.improvement is not None:
        summary_rows += [
            ("inconsistent_count", str(report.improvement.inconsistent_count)),
            ("corrected_count", str(report.improvement.corrected_count)),
            ("improvement_rate", _format_value(report.improvement.rate)),
        ]
    summary_rows.append(("failures", str(len(report.failures))))
    _write_text(
        out / "summary.csv",
        "metric,value\n" + "".join(f"{k},{v}\n" for k, v in summary_rows),
    )

    per_item_buffer = io.StringIO()
    per_item_writer = csv.writer(per_item_buffer, lineterminator="\n")
    per_item_writer.writerow(
        ["item_id", "final_score", "initial_score", "rounds", "converged", "human_label"]
    )
    for result in report.per_item:
        converged = result.rounds[-1].converged if result.rounds else False
        per_item_writer.writerow(
            [
                result.item_id,
                _format_value(result.final_score),
                _format_value(result.initial_score if result.rounds else None),
                str(len(result.rounds)),
                str(converged).lower(),
                _format_value(result.human_label),
            ]
        )
    _write_text(out / "per_item.csv", per_item_buffer.getvalue())

    counts = score_histogram(report)
    bins = HISTOGRAM_BINS
    header = ",".join(
        ["bin_low", "bin_high"] + [f"round_{i + 1}" for i in range(len(counts))]
    )
    hist_lines = [header + "\n"]
    for b in range(bins):
        row = [f"{b / bins:.2f}", f"{(b + 1) / bins:.2f}"] + [
            str(counts[r][b]) for r in range(len(counts))
        ]
        hist_lines.append(",".join(row) + "\n")
    _write_text(out / "plotdata" / "round_hist.csv", "".join(hist_lines))

    config = {key: value for key, value in report.config_echo}
    threads = config.get("threads", "1")
    _write_text(
        out / "plotdata" / "threads_seconds.csv",
        f"threads,seconds\n{threads},{report.timing.total_s:.6f}\n",
    )
    return written


def read_report(run_dir: str | Path) -> RunReport:
    path = Path(run_dir) / "report.json"
    if not path.exists():
        raise FileMissing(f"no report.json under {run_dir}")
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


# --- config files ------------------------------------------------------------


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse a plain ``key=value`` config file; ``#`` starts a comment line."""
    p = Path(path)
    if not p.exists():
        raise FileMissing(f"config file not found: {path}")
    values: dict[str, str] = {}
    for number, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise SchemaMismatch(f"expected key=value, got {stripped!r}", number)
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values
