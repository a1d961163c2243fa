#!/usr/bin/env python3
"""End-to-end consensus run over the bundled fixtures.

With --embeddings pointing at exported reference-model vectors this
reproduces the published ranking; without it the deterministic local
embedder is used, which exercises the full pipeline but yields scores
that carry no semantic meaning.
"""

import argparse
import sys

from defconsensus.cli import main as cli
from defconsensus.corpus import fixture_path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--embeddings", help="exported embeddings JSON")
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()

    provider = ["--embeddings", args.embeddings] if args.embeddings else []

    def out(step_name):
        return ["--out-dir", f"{args.out_dir}/{step_name}"] if args.out_dir else []

    steps = [
        ["ingest-check"] + [
            str(fixture_path(n))
            for n in ("individual-60.jsonl", "composite-20.jsonl",
                      "baseline.jsonl", "external-candidates.jsonl")
        ],
        ["analyze",
         "--candidates", str(fixture_path("composite-20.jsonl")),
         "--references", str(fixture_path("individual-60.jsonl"))]
        + provider + out("analyze"),
        ["evaluate",
         "--candidates", str(fixture_path("external-candidates.jsonl")),
         "--references", str(fixture_path("individual-60.jsonl"))]
        + provider + out("evaluate"),
    ]
    if args.embeddings:
        steps.append(
            ["compare", "--ids", "comp-19,comp-14,comp-12,base-0.1",
             "--embeddings", args.embeddings] + out("compare")
        )
    for step in steps:
        print(f"\n$ defconsensus {' '.join(step)}")
        code = cli(step)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
