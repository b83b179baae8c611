"""Human-judgment coherence arithmetic.

Evaluators mark the items they consider irrelevant; one evaluator's
coherence ratio is (items - marked) / items, and a subject's score is the
unweighted arithmetic mean over evaluators. Judgments arrive as JSONL and
are validated against the label set of the taxonomy or tag assignment
they reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Mapping, Sequence

from .corpus import MerchantRecord, normalize_term
from .tagger import TagAssignment
from .taxonomy import Taxonomy

SUBJECTS = ("taxonomy_terms", "merchant_tags")


class EvaluationError(Exception):
    pass


class MalformedLine(EvaluationError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        msg = f"line {line}: malformed judgment"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UnknownLabel(EvaluationError):
    def __init__(self, line: int, label: str):
        self.line = line
        self.label = label
        super().__init__(f"line {line}: label {label!r} not in the subject's label set")


class NoJudgments(EvaluationError):
    pass


class NoTags(EvaluationError):
    pass


@dataclass(frozen=True)
class JudgmentSet:
    evaluator_id: str
    subject: str
    subject_id: str
    marked_irrelevant: frozenset[str]


@dataclass(frozen=True)
class CoherenceReport:
    subject_id: str
    per_evaluator: tuple[tuple[str, float], ...]
    mean_coherence: float
    n_items: int


def load_judgments(
    path: str | Path,
    label_sets: Mapping[tuple[str, str], Collection[str]] | None = None,
) -> list[JudgmentSet]:
    """Read judgment sets from JSONL, one per line.

    When label_sets maps (subject, subject_id) to the subject's labels,
    every marked label must belong to that set (compared normalized);
    a violation is an UnknownLabel error naming the line.
    """
    judgments = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise MalformedLine(lineno, "not an object")
        try:
            evaluator_id = str(data["evaluator_id"])
            subject = data["subject"]
            subject_id = str(data["subject_id"])
            marked = data["marked_irrelevant"]
        except KeyError as exc:
            raise MalformedLine(lineno, f"missing key {exc.args[0]}") from None
        if subject not in SUBJECTS:
            raise MalformedLine(lineno, f"subject must be one of {SUBJECTS}")
        if not isinstance(marked, list) or any(not isinstance(m, str) for m in marked):
            raise MalformedLine(lineno, "marked_irrelevant must be a list of strings")

        if label_sets is not None:
            allowed = label_sets.get((subject, subject_id))
            if allowed is not None:
                normalized_allowed = {normalize_term(label) for label in allowed}
                for label in marked:
                    if normalize_term(label) not in normalized_allowed:
                        raise UnknownLabel(lineno, label)

        judgments.append(
            JudgmentSet(
                evaluator_id=evaluator_id,
                subject=subject,
                subject_id=subject_id,
                marked_irrelevant=frozenset(marked),
            )
        )
    return judgments


def _report(subject_id: str, n_items: int, judgments: Sequence[JudgmentSet]) -> CoherenceReport:
    per_evaluator = tuple(
        (j.evaluator_id, (n_items - len(j.marked_irrelevant)) / n_items)
        for j in judgments
    )
    mean = sum(r for _, r in per_evaluator) / len(per_evaluator)
    return CoherenceReport(
        subject_id=subject_id,
        per_evaluator=per_evaluator,
        mean_coherence=mean,
        n_items=n_items,
    )


def topic_coherence_report(
    taxonomy: Taxonomy, judgments: Sequence[JudgmentSet]
) -> CoherenceReport:
    """Coherence of a taxonomy's term set (all non-root nodes)."""
    if not judgments:
        raise NoJudgments(f"no judgments for topic {taxonomy.topic!r}")
    for j in judgments:
        if j.subject != "taxonomy_terms" or j.subject_id != taxonomy.topic:
            raise ValueError(
                f"judgment by {j.evaluator_id!r} references "
                f"({j.subject!r}, {j.subject_id!r}), not this taxonomy"
            )
    n_items = len(taxonomy) - 1
    if n_items < 1:
        raise ValueError(f"taxonomy {taxonomy.topic!r} has no non-root terms")
    return _report(taxonomy.topic, n_items, judgments)


def merchant_coherence_report(
    assignment: TagAssignment, judgments: Sequence[JudgmentSet]
) -> CoherenceReport:
    """Coherence of one merchant's assigned tag list."""
    if not assignment.tags:
        raise NoTags(f"merchant {assignment.merchant_id!r} has no tags")
    if not judgments:
        raise NoJudgments(f"no judgments for merchant {assignment.merchant_id!r}")
    for j in judgments:
        if j.subject != "merchant_tags" or j.subject_id != assignment.merchant_id:
            raise ValueError(
                f"judgment by {j.evaluator_id!r} references "
                f"({j.subject!r}, {j.subject_id!r}), not this merchant"
            )
    return _report(assignment.merchant_id, len(assignment.tags), judgments)


def top_merchants(records: Sequence[MerchantRecord], n: int = 5) -> list[MerchantRecord]:
    """Highest-transaction merchants, ties broken by merchant id."""
    return sorted(records, key=lambda r: (-r.transaction_count, r.merchant_id))[:n]


def save_report(report: CoherenceReport, path: str | Path) -> None:
    payload = {
        "subject_id": report.subject_id,
        "n_items": report.n_items,
        "per_evaluator": [
            {"evaluator_id": e, "ratio": r} for e, r in report.per_evaluator
        ],
        "mean_coherence": report.mean_coherence,
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
