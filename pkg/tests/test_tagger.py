"""Reverse-index tagging checked against a padded-substring scan.

The oracle joins the normalized token stream with spaces, pads it, and
finds each label key as " key " by plain substring search, which is the
slowest possible but obviously correct way to do multi-word matching.
The fixture is 100 generated merchants whose descriptions mix label
phrases, casing and diacritic variants, decoys, and sentence breaks in
the middle of multi-word labels.
"""

import json
import time

import pytest

from taxokit.corpus import MerchantRecord, tokenize
from taxokit.llm import HierarchyResult
from taxokit.rng import Xoshiro256StarStar
from taxokit.tagger import (
    TopicMismatch,
    build_reverse_index,
    save_assignments,
    tag_dataset,
    tag_merchant,
)
from taxokit.taxonomy import from_hierarchy_result

PHRASES = [
    "pizza calabresa quentinha",
    "temos forno a lenha",
    "PIZZA DE MUSSARELA boa",
    "borda recheada com catupiry",
    "massa fresca todo dia",
    "rodizio as tercas",
    "entrega veloz",
    "pizzaria do bairro",
    "promocao imperdivel",
    "qualidade garantida",
    "Forno a. Lenha especial",
    "meia pizza",
    "bordas recheadas",
    "a lenha",
    "de mussarela",
    "Pizzaria famosa na cidade",
]

SEPARATORS = [". ", ", ", " ", "! "]


def pizzeria_taxonomy():
    return from_hierarchy_result(
        "Pizzeria",
        HierarchyResult(
            tree={
                "pizza": ["pizza calabresa", "pizza de mussarela", "borda recheada"],
                "forno a lenha": ["massa fresca", "tradicional"],
            },
            unplaced=("rodizio", "entrega"),
        ),
    )


def make_merchants(count=100, seed=1234):
    rng = Xoshiro256StarStar(seed)
    records = []
    for i in range(count):
        if i % 33 == 0:
            description = ""
        else:
            n_phrases = 2 + rng.randbelow(4)
            parts = [PHRASES[rng.randbelow(len(PHRASES))] for _ in range(n_phrases)]
            description = ""
            for j, part in enumerate(parts):
                if j:
                    description += SEPARATORS[rng.randbelow(len(SEPARATORS))]
                description += part
        records.append(
            MerchantRecord(
                merchant_id=f"T{i:03d}",
                merchant_name=f"Merchant {i}",
                macro_category="Food",
                micro_category="Pizzeria",
                description=description,
                transaction_count=rng.randbelow(1000),
            )
        )
    return records


def oracle_tags(description, taxonomy):
    """Padded substring scan over every non-root label."""
    words = [tok.normalized for tok in tokenize(description)]
    padded = " " + " ".join(words) + " "
    hits = []
    for node in taxonomy.nodes.values():
        if node.node_id == taxonomy.root_id:
            continue
        key = " ".join(tok.normalized for tok in tokenize(node.label))
        if not key:
            continue
        position = padded.find(f" {key} ")
        if position == -1:
            continue
        offset = padded[:position].count(" ")
        hits.append((offset, node.label, node.node_id))
    hits.sort(key=lambda h: (h[0], h[1]))
    return hits


def test_hundred_merchant_fixture_matches_oracle_exactly():
    taxonomy = pizzeria_taxonomy()
    records = make_merchants()
    assert len(records) == 100

    started = time.perf_counter()
    result = tag_dataset(records, {"Pizzeria": taxonomy})
    elapsed = time.perf_counter() - started

    assert not result.skipped
    assert [a.merchant_id for a in result.assignments] == [r.merchant_id for r in records]
    for record, assignment in zip(records, result.assignments):
        expected = oracle_tags(record.description, taxonomy)
        got = [(t.first_match_offset, t.label, t.node_id) for t in assignment.tags]
        assert got == expected, record.merchant_id
    assert any(a.tags for a in result.assignments)
    assert any(not a.tags for a in result.assignments)
    assert elapsed < 1.0


def test_match_crosses_sentence_boundaries():
    taxonomy = pizzeria_taxonomy()
    index = build_reverse_index(taxonomy)
    record = MerchantRecord("m", "n", "Food", "Pizzeria", "Forno a. Lenha especial", 1)
    assignment = tag_merchant(record, index)
    assert [t.label for t in assignment.tags] == ["forno a lenha"]
    assert assignment.tags[0].first_match_offset == 0


def test_overlapping_nodes_all_match_and_order_by_offset_then_label():
    taxonomy = pizzeria_taxonomy()
    index = build_reverse_index(taxonomy)
    record = MerchantRecord("m", "n", "Food", "Pizzeria", "pizza calabresa", 1)
    tags = tag_merchant(record, index).tags
    assert [(t.label, t.first_match_offset) for t in tags] == [
        ("pizza", 0),
        ("pizza calabresa", 0),
    ]


def test_repeated_mention_keeps_earliest_offset():
    taxonomy = pizzeria_taxonomy()
    index = build_reverse_index(taxonomy)
    record = MerchantRecord("m", "n", "Food", "Pizzeria", "pizza boa e pizza barata", 1)
    tags = tag_merchant(record, index).tags
    assert len(tags) == 1
    assert tags[0].first_match_offset == 0


def test_casing_and_diacritics_do_not_block_matches():
    taxonomy = pizzeria_taxonomy()
    index = build_reverse_index(taxonomy)
    record = MerchantRecord(
        "m", "n", "Food", "Pizzeria", "PIZZA DE MUSSARÉLA tradiçional", 1
    )
    tags = tag_merchant(record, index).tags
    assert {t.label for t in tags} == {"pizza", "pizza de mussarela", "tradicional"}


def test_root_topic_is_never_a_tag():
    taxonomy = pizzeria_taxonomy()
    index = build_reverse_index(taxonomy)
    record = MerchantRecord("m", "n", "Food", "Pizzeria", "melhor Pizzeria da cidade", 1)
    assert tag_merchant(record, index).tags == ()


def test_leaves_only_index_skips_internal_nodes():
    taxonomy = pizzeria_taxonomy()
    index = build_reverse_index(taxonomy, leaves_only=True)
    record = MerchantRecord("m", "n", "Food", "Pizzeria", "pizza calabresa", 1)
    tags = tag_merchant(record, index).tags
    assert [t.label for t in tags] == ["pizza calabresa"]


def test_unindexable_label_is_skipped_quietly():
    taxonomy = from_hierarchy_result(
        "Topic", HierarchyResult(tree={"k": ["???", "pizza"]}, unplaced=())
    )
    index = build_reverse_index(taxonomy)
    assert "" not in index.postings
    record = MerchantRecord("m", "n", "Food", "Topic", "pizza ???", 1)
    assert [t.label for t in tag_merchant(record, index).tags] == ["pizza"]


def test_topic_mismatch_is_an_error():
    index = build_reverse_index(pizzeria_taxonomy())
    record = MerchantRecord("m", "n", "Food", "Sushi Bar", "sushi", 1)
    with pytest.raises(TopicMismatch):
        tag_merchant(record, index)


def test_uncovered_micro_categories_are_skipped_and_counted():
    taxonomy = pizzeria_taxonomy()
    records = [
        MerchantRecord("a", "n", "Food", "Pizzeria", "pizza", 1),
        MerchantRecord("b", "n", "Food", "Sushi Bar", "sushi", 1),
        MerchantRecord("c", "n", "Food", "Sushi Bar", "temaki", 1),
    ]
    result = tag_dataset(records, {"Pizzeria": taxonomy})
    assert [a.merchant_id for a in result.assignments] == ["a"]
    assert result.skipped == [("b", "Sushi Bar"), ("c", "Sushi Bar")]
    assert result.skip_counts() == {"Sushi Bar": 2}


def test_save_assignments_writes_jsonl(tmp_path):
    taxonomy = pizzeria_taxonomy()
    records = [MerchantRecord("a", "n", "Food", "Pizzeria", "pizza calabresa", 1)]
    result = tag_dataset(records, {"Pizzeria": taxonomy})
    path = tmp_path / "assignments.jsonl"
    save_assignments(result.assignments, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    payload = json.loads(lines[0])
    assert payload["merchant_id"] == "a"
    assert payload["topic"] == "Pizzeria"
    assert [t["label"] for t in payload["tags"]] == ["pizza", "pizza calabresa"]
