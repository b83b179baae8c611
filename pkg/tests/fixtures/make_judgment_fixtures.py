"""Regenerate the calibrated judgment fixtures.

Run from the repository root:

    python3 tests/fixtures/make_judgment_fixtures.py

Three files, all deterministic:

  judgments_merchant_10.jsonl
      100 evaluators over a 10-tag merchant; 77 mark exactly one tag,
      23 mark none. Mean coherence = (77*9 + 23*10) / 1000 = 0.9230.

  judgments_merchant_8.jsonl
      1250 evaluators over an 8-tag merchant; 289 mark exactly one tag,
      961 mark none. Mean coherence = (289*7 + 961*8) / 10000 = 0.9711.

  judgments_taxonomy.jsonl
      12 evaluators for each of two 20-term taxonomies, each marking
      0-2 terms drawn with the package generator (seed below).

test_evaluation.py rebuilds the same tag lists and taxonomy labels, so
edit both together or not at all.
"""

import json
from pathlib import Path

from taxokit.rng import Xoshiro256StarStar

HERE = Path(__file__).resolve().parent
SEED = 414243

MERCHANT_10_TAGS = [
    "pizza", "pizza calabresa", "forno a lenha", "massa fresca",
    "borda recheada", "rodizio", "entrega", "mussarela",
    "margherita", "tradicional",
]
MERCHANT_8_TAGS = MERCHANT_10_TAGS[:8]

TAXONOMY_TOPICS = ("Calibration Topic A", "Calibration Topic B")


def taxonomy_labels(topic):
    """The 20 non-root labels of one calibration taxonomy."""
    suffix = topic[-1].lower()
    keys = [f"group one {suffix}", f"group two {suffix}"]
    terms = [f"term {suffix}{i:02d}" for i in range(1, 19)]
    return keys + terms


def merchant_lines(merchant_id, tags, n_evaluators, n_marking):
    lines = []
    for i in range(n_evaluators):
        marked = [tags[i % len(tags)]] if i < n_marking else []
        lines.append(
            {
                "evaluator_id": f"e{i:04d}",
                "subject": "merchant_tags",
                "subject_id": merchant_id,
                "marked_irrelevant": marked,
            }
        )
    return lines


def taxonomy_lines(rng):
    lines = []
    for topic in TAXONOMY_TOPICS:
        labels = taxonomy_labels(topic)
        for i in range(12):
            n_marked = rng.randbelow(3)
            marked = rng.sample(labels, n_marked)
            lines.append(
                {
                    "evaluator_id": f"t{i:02d}",
                    "subject": "taxonomy_terms",
                    "subject_id": topic,
                    "marked_irrelevant": marked,
                }
            )
    return lines


def write_jsonl(name, lines):
    with (HERE / name).open("w", encoding="utf-8") as handle:
        for line in lines:
            handle.write(json.dumps(line, ensure_ascii=False) + "\n")
    print(f"{name}: {len(lines)} judgments")


def main():
    write_jsonl(
        "judgments_merchant_10.jsonl",
        merchant_lines("M-CAL-10", MERCHANT_10_TAGS, 100, 77),
    )
    write_jsonl(
        "judgments_merchant_8.jsonl",
        merchant_lines("M-CAL-8", MERCHANT_8_TAGS, 1250, 289),
    )
    write_jsonl("judgments_taxonomy.jsonl", taxonomy_lines(Xoshiro256StarStar(SEED)))


if __name__ == "__main__":
    main()
