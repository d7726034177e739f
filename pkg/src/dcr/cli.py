"""Command-line interface.

Subcommands:
  evaluate   score a dataset (evaluate-only, one round per item)
  improve    full multi-round evaluate-and-rewrite loop
  score-only recompute aggregate metrics from a previous run directory
  mock-demo  end-to-end run on the bundled fixtures, zero network

Options may come from a ``key=value`` config file (``--config``); explicit
command-line flags override file values. Exit codes: 0 success, 1 aborted
run, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import bench_io, fixtures, pipeline
from .errors import Aborted, DcrError
from .gateway import CachingBackend, GenerationSettings, HttpBackend
from .model import RunReport, TaskKind, Timing
from .prompts import load_registry
from .segmenter import DEFAULT_CONFIG

_TASKS = {
    "semantic": TaskKind.SEMANTIC_PAIR,
    "summarization": TaskKind.SUMMARIZATION_CONSISTENCY,
    "paragraph": TaskKind.PARAGRAPH_LEVEL_CONSISTENCY,
}

_DEFAULTS = {
    "task": "summarization",
    "family": "generic_pairs",
    "model": "gpt-3.5-turbo",
    "rounds": "3",
    "threads": "1",
    "limit": "",
    "fail_policy": "skip",
    "out": "runs/latest",
    "cache_dir": "",
    "prompt_dir": "",
    "base_url": "",
    "temperature": "0.0",
    "max_retries": "3",
    "dataset": "",
}


class _UsageError(Exception):
    pass


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--task", choices=sorted(_TASKS))
    parser.add_argument("--dataset")
    parser.add_argument("--family", choices=bench_io.FAMILIES)
    parser.add_argument("--model")
    parser.add_argument("--rounds", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--cache-dir", dest="cache_dir")
    parser.add_argument("--prompt-dir", dest="prompt_dir")
    parser.add_argument("--out")
    parser.add_argument("--limit", type=int)
    parser.add_argument("--fail-policy", dest="fail_policy", choices=["skip", "abort"])
    parser.add_argument("--config")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcr",
        description="Evaluate and improve candidate/reference consistency.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("evaluate", "score a dataset without rewriting (one round per item)"),
        ("improve", "multi-round evaluate-and-rewrite loop"),
        ("score-only", "recompute aggregate metrics from a previous run directory"),
        ("mock-demo", "offline end-to-end run on the bundled fixtures"),
    ):
        command = sub.add_parser(name, help=help_text)
        _add_common_flags(command)
    return parser


def _resolve_config(args: argparse.Namespace) -> dict[str, str]:
    resolved = dict(_DEFAULTS)
    if args.config:
        file_values = bench_io.load_config_file(args.config)
        if "model_name" in file_values:
            file_values["model"] = file_values.pop("model_name")
        unknown = set(file_values) - set(resolved)
        if unknown:
            raise _UsageError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_values)
    for key in _DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = str(value)
    return resolved


def _config_echo(config: dict[str, str], command: str) -> tuple[tuple[str, str], ...]:
    echo = {"command": command}
    echo.update({k: config[k] for k in sorted(config)})
    return tuple(echo.items())


def _pipeline_config(config: dict[str, str], improve: bool) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(
        task=_TASKS[config["task"]],
        max_rounds=int(config["rounds"]) if improve else 1,
        improve=improve,
        worker_count=int(config["threads"]),
        fail_policy=config["fail_policy"],
    )


def _settings(config: dict[str, str]) -> GenerationSettings:
    return GenerationSettings(
        model_name=config["model"],
        temperature=float(config["temperature"]),
        max_retries=int(config["max_retries"]),
    )


def _live_backend(config: dict[str, str]):
    if not config["base_url"]:
        raise _UsageError(
            "no base_url configured; set base_url=... in a --config file"
        )
    backend = HttpBackend(config["base_url"])
    if config["cache_dir"]:
        backend = CachingBackend(backend, config["cache_dir"])
    return backend


def _run_and_write(
    items,
    cfg: pipeline.PipelineConfig,
    backend,
    config: dict[str, str],
    command: str,
    deterministic_timing: bool = False,
) -> RunReport:
    registry = load_registry(config["prompt_dir"] or None)
    out_dir = Path(config["out"])
    report = pipeline.run_batch(
        items,
        cfg,
        backend,
        settings=_settings(config),
        segmentation=DEFAULT_CONFIG,
        registry=registry,
        progress_path=out_dir / "progress.jsonl",
    )
    report = replace(report, config_echo=_config_echo(config, command))
    report = bench_io.fill_aggregates(report)
    if deterministic_timing:
        report = replace(report, timing=Timing(0.0, ()))
    bench_io.write_report(report, out_dir)
    return report


def _print_summary(report: RunReport, out: str) -> None:
    print(f"items: {len(report.per_item)}  failures: {len(report.failures)}")
    if report.improvement is not None:
        rate = report.improvement.rate
        print(
            "improvement: "
            f"{report.improvement.corrected_count}/{report.improvement.inconsistent_count}"
            + (f" ({rate:.2%})" if rate is not None else " (rate undefined)")
        )
    if report.auroc is not None:
        print(f"auroc: {report.auroc:.6f}")
    if report.correlations is not None and report.correlations.spearman is not None:
        print(f"spearman: {report.correlations.spearman:.6f}")
    print(f"report written to {out}")


def _cmd_evaluate_or_improve(args: argparse.Namespace, improve: bool) -> int:
    config = _resolve_config(args)
    config["improve"] = "true" if improve else "false"
    if not config["dataset"]:
        raise _UsageError("--dataset is required")
    spec = bench_io.DatasetSpec(
        family=config["family"],
        path=config["dataset"],
        limit=int(config["limit"]) if config["limit"] else None,
    )
    items = bench_io.load_dataset(spec)
    cfg = _pipeline_config(config, improve=improve)
    backend = _live_backend(config)
    report = _run_and_write(
        items, cfg, backend, config, "improve" if improve else "evaluate"
    )
    _print_summary(report, config["out"])
    return 0


def _cmd_score_only(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    run_dir = config["out"]
    report = bench_io.read_report(run_dir)
    report = bench_io.fill_aggregates(report)
    bench_io.write_report(report, run_dir)
    _print_summary(report, run_dir)
    return 0


def _cmd_mock_demo(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if args.out is None and not args.config:
        config["out"] = "runs/mock_demo"
    if args.rounds is None:
        config["rounds"] = "2"
    if args.task is None:
        config["task"] = "summarization"
    config["improve"] = "true"
    config["model"] = "mock"
    config["dataset"] = "bundled:demo_items.jsonl"
    items = fixtures.demo_items()
    cfg = _pipeline_config(config, improve=True)
    backend = fixtures.demo_backend()
    report = _run_and_write(
        items, cfg, backend, config, "mock-demo", deterministic_timing=True
    )
    _print_summary(report, config["out"])
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "evaluate":
            return _cmd_evaluate_or_improve(args, improve=False)
        if args.command == "improve":
            return _cmd_evaluate_or_improve(args, improve=True)
        if args.command == "score-only":
            return _cmd_score_only(args)
        if args.command == "mock-demo":
            return _cmd_mock_demo(args)
        parser.error(f"unknown command {args.command!r}")
        return 2
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Aborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 1
    except DcrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
