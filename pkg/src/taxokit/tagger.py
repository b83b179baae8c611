"""Merchant tagging through an inverted index over taxonomy node labels.

Descriptions are matched raw (tokenized and normalized, but with stop
words intact) against the normalized labels of all non-root nodes of the
taxonomy whose topic equals the merchant's micro category. Every window
of the token stream that equals a posting key tags that node; overlapping
matches of different nodes all count.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import MerchantRecord, tokenize
from .taxonomy import Taxonomy

log = logging.getLogger(__name__)


class TopicMismatch(Exception):
    def __init__(self, micro_category: str, taxonomy_topic: str):
        self.micro_category = micro_category
        self.taxonomy_topic = taxonomy_topic
        super().__init__(
            f"merchant micro category {micro_category!r} does not match "
            f"taxonomy topic {taxonomy_topic!r}"
        )


@dataclass(frozen=True)
class ReverseIndex:
    taxonomy_topic: str
    max_term_len: int
    postings: dict[str, int]
    labels: dict[int, str] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class Tag:
    node_id: int
    label: str
    first_match_offset: int


@dataclass(frozen=True)
class TagAssignment:
    merchant_id: str
    taxonomy_topic: str
    tags: tuple[Tag, ...]


@dataclass
class TagRunResult:
    assignments: list[TagAssignment] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def skip_counts(self) -> Counter:
        """Skipped merchants per uncovered micro category."""
        return Counter(micro for _, micro in self.skipped)


def _posting_key(label: str) -> str:
    return " ".join(tok.normalized for tok in tokenize(label))


def build_reverse_index(taxonomy: Taxonomy, leaves_only: bool = False) -> ReverseIndex:
    """Index non-root nodes by normalized space-joined label.

    The root is never indexed (the topic itself is not a tag). With
    leaves_only, internal nodes are excluded too.
    """
    nodes = taxonomy.leaves() if leaves_only else [
        n for n in taxonomy.nodes.values() if n.node_id != taxonomy.root_id
    ]
    postings: dict[str, int] = {}
    labels: dict[int, str] = {}
    max_len = 0
    for node in nodes:
        key = _posting_key(node.label)
        if not key:
            log.warning("node %d label %r normalizes to nothing; not indexed",
                        node.node_id, node.label)
            continue
        postings[key] = node.node_id
        labels[node.node_id] = node.label
        max_len = max(max_len, key.count(" ") + 1)
    return ReverseIndex(
        taxonomy_topic=taxonomy.topic,
        max_term_len=max_len,
        postings=postings,
        labels=labels,
    )


def tag_merchant(record: MerchantRecord, index: ReverseIndex) -> TagAssignment:
    """All taxonomy terms mentioned in the description, earliest first.

    Windows of 1..max_term_len tokens slide over the full normalized token
    stream (sentence boundaries do not block a match). Tags deduplicate by
    node keeping the earliest offset and order by (offset, label).
    """
    if record.micro_category != index.taxonomy_topic:
        raise TopicMismatch(record.micro_category, index.taxonomy_topic)

    tokens = [tok.normalized for tok in tokenize(record.description)]
    found: dict[int, Tag] = {}
    node_for = index.postings
    for start in range(len(tokens)):
        limit = min(index.max_term_len, len(tokens) - start)
        for length in range(1, limit + 1):
            key = " ".join(tokens[start : start + length])
            node_id = node_for.get(key)
            if node_id is not None and node_id not in found:
                found[node_id] = Tag(
                    node_id=node_id,
                    label=index.labels[node_id],
                    first_match_offset=start,
                )
    tags = tuple(sorted(found.values(), key=lambda t: (t.first_match_offset, t.label)))
    return TagAssignment(
        merchant_id=record.merchant_id,
        taxonomy_topic=index.taxonomy_topic,
        tags=tags,
    )


def tag_dataset(
    records: Iterable[MerchantRecord],
    taxonomies: dict[str, Taxonomy],
    leaves_only: bool = False,
) -> TagRunResult:
    """Tag every merchant against the taxonomy of its micro category.

    Merchants whose micro category has no taxonomy are skipped and listed
    in the result; assignment order follows input order.
    """
    indexes = {
        topic: build_reverse_index(tax, leaves_only=leaves_only)
        for topic, tax in taxonomies.items()
    }
    result = TagRunResult()
    for record in records:
        index = indexes.get(record.micro_category)
        if index is None:
            result.skipped.append((record.merchant_id, record.micro_category))
            continue
        result.assignments.append(tag_merchant(record, index))
    return result


def save_assignments(assignments: Sequence[TagAssignment], path: str | Path) -> None:
    """JSONL, one object per merchant: {merchant_id, topic, tags}."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for assignment in assignments:
            handle.write(
                json.dumps(
                    {
                        "merchant_id": assignment.merchant_id,
                        "topic": assignment.taxonomy_topic,
                        "tags": [
                            {"label": tag.label, "node_id": tag.node_id}
                            for tag in assignment.tags
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
