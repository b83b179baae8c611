"""Candidate-term selection: keyword extraction merged with topic-model terms.

One micro category's sub-corpus yields up to 30 ranked keywords plus the
kept terms of every LDA topic; the two lists are merged keeping keywords
first, then topic terms in (topic, rank) order, with repetitions removed
by normalized form (first occurrence wins).
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import SubCorpus, normalize_term
from .keywords import extract_keywords
from .lda import build_dictionary, select_topic_count, topic_terms


@dataclass(frozen=True)
class SelectionParams:
    top_k: int = 30
    max_ngram: int = 3
    dedup_threshold: float = 0.8
    min_bigram_count: int = 20
    k_range: tuple[int, ...] = (1, 2, 3, 4, 5)
    sweeps: int = 500
    burn_in: int = 50
    hyper_update_every: int = 10
    beta: float = 0.01
    coherence_top_n: int = 10
    raw_top: int = 20
    keep_fraction: float = 0.6


def gather_candidates(
    subcorpus: SubCorpus, params: SelectionParams | None = None, seed: int = 0
) -> list[str]:
    """Union of keyword and topic-model candidates for one sub-corpus."""
    if params is None:
        params = SelectionParams()

    keyword_surfaces = [
        kw.surface
        for kw in extract_keywords(
            subcorpus,
            max_ngram=params.max_ngram,
            top_k=params.top_k,
            dedup_threshold=params.dedup_threshold,
        )
    ]

    dictionary, docs = build_dictionary(subcorpus, params.min_bigram_count)
    model = select_topic_count(
        docs,
        k_range=params.k_range,
        seed=seed,
        sweeps=params.sweeps,
        burn_in=params.burn_in,
        hyper_update_every=params.hyper_update_every,
        beta=params.beta,
        dictionary=dictionary,
        coherence_top_n=params.coherence_top_n,
    )
    lda_surfaces = [
        term
        for topic in topic_terms(model, params.raw_top, params.keep_fraction)
        for term, _ in topic.terms
    ]

    merged: list[str] = []
    seen: set[str] = set()
    for surface in keyword_surfaces + lda_surfaces:
        norm = normalize_term(surface)
        if norm in seen:
            continue
        seen.add(norm)
        merged.append(surface)
    return merged
