#!/usr/bin/env python3
"""Show how the score distribution shifts toward 1.0 across rewrite rounds.

Runs the bundled fixture items through the scripted backend and prints the
per-round score histogram (the same numbers mock-demo writes to
plotdata/round_hist.csv).
"""

import sys

from dcr import fixtures
from dcr.bench_io import score_histogram
from dcr.gateway import GenerationSettings
from dcr.model import TaskKind
from dcr.pipeline import PipelineConfig, run_batch


def main() -> int:
    cfg = PipelineConfig(
        task=TaskKind.SUMMARIZATION_CONSISTENCY, max_rounds=2, improve=True
    )
    report = run_batch(
        fixtures.demo_items(), cfg, fixtures.demo_backend(), GenerationSettings()
    )
    counts = score_histogram(report)
    bins = len(counts[0])
    header = "score bin " + " ".join(f"round_{i + 1:<2d}" for i in range(len(counts)))
    print(header)
    for b in range(bins):
        row = f"[{b / bins:.1f},{(b + 1) / bins:.1f}) " + " ".join(
            f"{counts[r][b]:>7d}" for r in range(len(counts))
        )
        print(row)
    consistent = [counts[r][bins - 1] for r in range(len(counts))]
    print(f"items at score 1.0 by round: {consistent}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
