"""Statistical keyword extraction over a sub-corpus.

The sub-corpus is treated as one virtual document (sentence indices offset
per source document). Five per-term features combine into a relevance
score where lower means more relevant; contiguous n-grams are scored from
their constituent unigrams, ranked, and deduplicated by string similarity.

Scoring formulas (natural logarithms throughout):

    w_case = max(tf_upper, tf_acronym) / (1 + ln(tf))
    w_pos  = ln(ln(3 + median_sentence_index))
    w_freq = tf / (mean_tf + std_tf)
    w_rel  = 1 + (left_distinct/left_total + right_distinct/right_total)
                 * tf / max_tf          (each ratio 0 when its total is 0)
    w_sent = sentence_frequency / n_sentences
    score  = (w_rel * w_pos) / (w_case + w_freq/w_rel + w_sent/w_rel)

    ngram score = prod(unigram scores) / (tf_ngram * (1 + sum(unigram scores)))

mean_tf/std_tf are the population mean and standard deviation of unigram
term frequencies; co-occurrence counts use a one-token window inside
sentence boundaries.
"""

from __future__ import annotations

import json
import math
import statistics as pystats
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import EmptyCorpus, SubCorpus, Token


@dataclass(frozen=True, slots=True)
class TermStatistics:
    term: str
    tf: int
    tf_upper: int
    tf_acronym: int
    sentence_frequency: int
    median_sentence_index: float
    left_distinct: int
    left_total: int
    right_distinct: int
    right_total: int


@dataclass(frozen=True, slots=True)
class CorpusAggregates:
    mean_tf: float
    std_tf: float
    max_tf: int
    n_sentences: int


@dataclass(frozen=True, slots=True)
class CandidateTerm:
    surface: str
    score: float
    tf: int


def virtual_document(subcorpus: SubCorpus) -> list[Token]:
    """Concatenate all documents, offsetting sentence indices so they keep
    counting globally instead of restarting per document."""
    stream: list[Token] = []
    offset = 0
    for doc in subcorpus.documents:
        if not doc:
            continue
        for tok in doc:
            stream.append(replace(tok, sentence_index=tok.sentence_index + offset))
        offset += max(t.sentence_index for t in doc) + 1
    return stream


def collect_statistics(subcorpus: SubCorpus) -> dict[str, TermStatistics]:
    stream = virtual_document(subcorpus)
    return _statistics_from_stream(stream)


def _statistics_from_stream(stream: list[Token]) -> dict[str, TermStatistics]:
    if not stream:
        raise EmptyCorpus("no retained tokens in sub-corpus")

    tf: dict[str, int] = {}
    tf_upper: dict[str, int] = {}
    tf_acronym: dict[str, int] = {}
    sentences: dict[str, set[int]] = {}
    sentence_indices: dict[str, list[int]] = {}
    left: dict[str, list[str]] = {}
    right: dict[str, list[str]] = {}

    for i, tok in enumerate(stream):
        term = tok.normalized
        tf[term] = tf.get(term, 0) + 1
        if tok.surface[:1].isupper() and tok.position_in_sentence != 0:
            tf_upper[term] = tf_upper.get(term, 0) + 1
        if tok.surface.isupper():
            tf_acronym[term] = tf_acronym.get(term, 0) + 1
        sentences.setdefault(term, set()).add(tok.sentence_index)
        sentence_indices.setdefault(term, []).append(tok.sentence_index)
        if i > 0 and stream[i - 1].sentence_index == tok.sentence_index:
            left.setdefault(term, []).append(stream[i - 1].normalized)
            right.setdefault(stream[i - 1].normalized, []).append(term)

    stats = {}
    for term, count in tf.items():
        lefts = left.get(term, [])
        rights = right.get(term, [])
        stats[term] = TermStatistics(
            term=term,
            tf=count,
            tf_upper=tf_upper.get(term, 0),
            tf_acronym=tf_acronym.get(term, 0),
            sentence_frequency=len(sentences[term]),
            median_sentence_index=float(pystats.median(sentence_indices[term])),
            left_distinct=len(set(lefts)),
            left_total=len(lefts),
            right_distinct=len(set(rights)),
            right_total=len(rights),
        )
    return stats


def corpus_aggregates(
    stats: Mapping[str, TermStatistics], n_sentences: int
) -> CorpusAggregates:
    tfs = [s.tf for s in stats.values()]
    return CorpusAggregates(
        mean_tf=pystats.fmean(tfs),
        std_tf=pystats.pstdev(tfs),
        max_tf=max(tfs),
        n_sentences=n_sentences,
    )


def score_unigram(stats: TermStatistics, agg: CorpusAggregates) -> float:
    w_case = max(stats.tf_upper, stats.tf_acronym) / (1.0 + math.log(stats.tf))
    w_pos = math.log(math.log(3.0 + stats.median_sentence_index))
    w_freq = stats.tf / (agg.mean_tf + agg.std_tf)
    spread = 0.0
    if stats.left_total > 0:
        spread += stats.left_distinct / stats.left_total
    if stats.right_total > 0:
        spread += stats.right_distinct / stats.right_total
    w_rel = 1.0 + spread * stats.tf / agg.max_tf
    w_sent = stats.sentence_frequency / agg.n_sentences
    return (w_rel * w_pos) / (w_case + w_freq / w_rel + w_sent / w_rel)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> float:
    """Normalized Levenshtein similarity: 1 - distance / max length."""
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


def extract_keywords(
    subcorpus: SubCorpus,
    max_ngram: int = 3,
    top_k: int = 30,
    dedup_threshold: float = 0.8,
) -> list[CandidateTerm]:
    """Rank candidate n-grams (ascending score, lower is better).

    Candidates are contiguous retained-token runs inside one sentence with
    length up to max_ngram. Ties break toward higher tf, then lexicographic
    surface. A candidate whose similarity with an already-kept, better
    scored one reaches dedup_threshold is dropped. At most top_k returned.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not 1 <= max_ngram <= 5:
        raise ValueError("max_ngram must be in [1, 5]")

    stream = virtual_document(subcorpus)
    stats = _statistics_from_stream(stream)
    n_sentences = len({tok.sentence_index for tok in stream})
    agg = corpus_aggregates(stats, n_sentences)
    unigram_score = {term: score_unigram(s, agg) for term, s in stats.items()}

    ngram_tf: dict[tuple[str, ...], int] = {}
    run: list[str] = []

    def flush(run_terms: list[str]) -> None:
        for length in range(1, max_ngram + 1):
            for start in range(len(run_terms) - length + 1):
                gram = tuple(run_terms[start : start + length])
                ngram_tf[gram] = ngram_tf.get(gram, 0) + 1

    current_sentence = None
    for tok in stream:
        if tok.sentence_index != current_sentence:
            if run:
                flush(run)
            run = []
            current_sentence = tok.sentence_index
        run.append(tok.normalized)
    if run:
        flush(run)

    candidates = []
    for gram, gram_tf in ngram_tf.items():
        scores = [unigram_score[t] for t in gram]
        score = math.prod(scores) / (gram_tf * (1.0 + sum(scores)))
        candidates.append(CandidateTerm(surface=" ".join(gram), score=score, tf=gram_tf))
    candidates.sort(key=lambda c: (c.score, -c.tf, c.surface))

    kept: list[CandidateTerm] = []
    for cand in candidates:
        if len(kept) >= top_k:
            break
        if any(similarity(cand.surface, k.surface) >= dedup_threshold for k in kept):
            continue
        kept.append(cand)
    return kept


def save_keywords(terms: Sequence[CandidateTerm], path: str | Path) -> None:
    payload = [{"surface": t.surface, "score": t.score, "tf": t.tf} for t in terms]
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def load_keywords(path: str | Path) -> list[CandidateTerm]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        CandidateTerm(surface=item["surface"], score=item["score"], tf=item["tf"])
        for item in payload
    ]
