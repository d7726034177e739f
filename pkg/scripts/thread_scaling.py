#!/usr/bin/env python3
"""Measure batch wall time against worker count on the bundled fixtures.

Uses the scripted backend with synthetic per-call latency, so the shape of
the threads-vs-seconds curve is visible without any API access. Appends one
CSV row per thread count; feed the output to any plotting tool.
"""

import argparse
import sys

from dcr import fixtures
from dcr.gateway import GenerationSettings
from dcr.model import TaskKind
from dcr.pipeline import PipelineConfig, run_batch


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--threads", default="1,2,4,8", help="comma-separated worker counts")
    parser.add_argument("--latency-ms", type=float, default=50.0, help="per-call latency")
    parser.add_argument("--repeat", type=int, default=3, help="items dataset repetitions")
    parser.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    args = parser.parse_args()

    items = fixtures.demo_items() * args.repeat
    rows = ["threads,seconds"]
    for threads in [int(t) for t in args.threads.split(",")]:
        backend = fixtures.demo_backend(latency_s=args.latency_ms / 1000.0)
        cfg = PipelineConfig(
            task=TaskKind.SUMMARIZATION_CONSISTENCY,
            max_rounds=2,
            improve=True,
            worker_count=threads,
        )
        report = run_batch(items, cfg, backend, GenerationSettings(max_retries=0))
        rows.append(f"{threads},{report.timing.total_s:.6f}")
        print(f"threads={threads:<3d} wall={report.timing.total_s:.3f}s", file=sys.stderr)

    text = "\n".join(rows) + "\n"
    if args.out == "-":
        print(text, end="")
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
