#!/usr/bin/env python3
"""Generate data/judgments_toy.jsonl from a finished pipeline run.

Simulates a small annotation round over the artifacts in out/: twelve
evaluators look at each built taxonomy's term list and mark zero to two
terms as unrelated; eight evaluators look at the tag list of each of the
five highest-transaction merchants and mark zero or one tag. Marks are
drawn with a fixed seed, so the file regenerates identically as long as
the pipeline outputs are unchanged.

Run after: taxokit --config data/toy.ini build-taxonomies && taxokit
--config data/toy.ini tag
"""

import json
import sys
from pathlib import Path

from taxokit import corpus as C
from taxokit.config import load_config
from taxokit.evaluation import top_merchants
from taxokit.pipeline import load_assignments
from taxokit.rng import Xoshiro256StarStar
from taxokit.taxonomy import Taxonomy

N_TOPIC_EVALUATORS = 12
N_MERCHANT_EVALUATORS = 8


def main() -> int:
    root = Path(__file__).resolve().parent.parent
    cfg = load_config(root / "data" / "toy.ini")
    out_dir = root / cfg.output_dir

    manifest = json.loads((out_dir / "taxonomies" / "manifest.json").read_text(encoding="utf-8"))
    taxonomies = [
        Taxonomy.load(out_dir / entry["file"])
        for entry in manifest["taxonomies"]
        if "file" in entry
    ]
    if not taxonomies:
        print("no taxonomies found; run build-taxonomies first", file=sys.stderr)
        return 1
    assignments = {
        a.merchant_id: a
        for a in load_assignments(out_dir / "tags" / "assignments.jsonl")
    }
    records = C.ingest_merchants(root / cfg.dataset_path)

    rng = Xoshiro256StarStar(20240817)
    lines = []
    for tax in taxonomies:
        labels = [n.label for n in tax.nodes.values() if n.node_id != tax.root_id]
        for e in range(N_TOPIC_EVALUATORS):
            n_marks = rng.randbelow(3)  # 0, 1, or 2
            marked = rng.sample(labels, n_marks) if n_marks else []
            lines.append(
                {
                    "evaluator_id": f"ann{e + 1:02d}",
                    "subject": "taxonomy_terms",
                    "subject_id": tax.topic,
                    "marked_irrelevant": marked,
                }
            )

    for record in top_merchants(records, n=5):
        assignment = assignments.get(record.merchant_id)
        if assignment is None or not assignment.tags:
            continue
        tag_labels = [t.label for t in assignment.tags]
        for e in range(N_MERCHANT_EVALUATORS):
            n_marks = rng.randbelow(2)  # 0 or 1
            marked = rng.sample(tag_labels, n_marks) if n_marks else []
            lines.append(
                {
                    "evaluator_id": f"ann{e + 1:02d}",
                    "subject": "merchant_tags",
                    "subject_id": record.merchant_id,
                    "marked_irrelevant": marked,
                }
            )

    out = root / "data" / "judgments_toy.jsonl"
    with out.open("w", encoding="utf-8") as handle:
        for line in lines:
            handle.write(json.dumps(line, ensure_ascii=False) + "\n")
    print(f"wrote {len(lines)} judgment sets to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
