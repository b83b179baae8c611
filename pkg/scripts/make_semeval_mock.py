#!/usr/bin/env python3
"""Build data/mock_semeval.json: a scripted provider that answers parent
questions for the bundled food edge sample straight from the edge file.

One entry per leaf (only leaves can be hidden by the benchmark) plus an
abstaining catch-all, so a mock-driven expansion run over the sample
scores F1 = 1.0. Useful as an offline stand-in for the live smoke run.
"""

import json
import sys
from pathlib import Path

from taxokit.taxonomy import load_semeval_edges


def main() -> int:
    root = Path(__file__).resolve().parent.parent
    edges = root / "data" / "semeval_food_sample.tsv"
    tax = load_semeval_edges(edges)

    entries = []
    for leaf in tax.leaves():
        parent = tax.nodes[leaf.parent_id]
        entries.append(
            {
                "match": f"father of {leaf.label}?",
                "reply": f"The parent is {parent.label}.",
            }
        )
    entries.append({"match": "Who is the father of", "reply": "I do not know."})

    out = root / "data" / "mock_semeval.json"
    out.write_text(
        json.dumps(entries, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(entries)} mock entries to {out} ({len(tax.leaves())} leaves)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
