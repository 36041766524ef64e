#!/usr/bin/env python3
"""Run the whole pipeline over the bundled sample corpus and print the counts.

Equivalent to chaining the CLI stages:
  chartforge --config <cfg> ingest ... export --task all
"""

from __future__ import annotations

import argparse
import json
import time

from chartforge import pipeline
from chartforge.config import PipelineConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", default="sample_corpus")
    parser.add_argument("--workspace", default="workspace")
    parser.add_argument("--caption-mode", choices=("template", "llm"),
                        default="template")
    args = parser.parse_args()

    cfg = PipelineConfig(
        input_glob=f"{args.corpus}/*.csv",
        workspace_dir=args.workspace,
        caption_mode=args.caption_mode,
    )
    start = time.monotonic()
    counts = pipeline.run_all_stages(cfg)
    counts["wall_seconds"] = round(time.monotonic() - start, 2)
    counts["specs_per_table"] = round(counts["specs"] / counts["tables"], 2)
    counts["captions_per_chart"] = 2  # one overview + one analysis, always
    print(json.dumps(counts, indent=2))


if __name__ == "__main__":
    main()
