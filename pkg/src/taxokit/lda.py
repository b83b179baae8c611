"""Latent Dirichlet Allocation by collapsed Gibbs sampling.

Documents are encoded against a dictionary of unigrams plus frequent
within-sentence bigrams (bigram occurrences are emitted in addition to
their constituent unigrams, never instead of them). The sampler draws
token-topic assignments from the full conditional

    P(z = t) proportional to (n_dk + alpha_t) * (n_kw + beta) / (n_k + V*beta)

with the current token excluded from all counts. beta stays fixed; alpha
is learned after burn-in with Minka's fixed-point digamma update. The
topic count is chosen by mean UMass coherence over a small k range.

All randomness comes from the package's pinned generator (`taxokit.rng`),
so a (docs, k, seed, sweeps) tuple fully determines the trained model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from scipy.special import digamma

from .corpus import EmptyCorpus, SubCorpus
from .rng import Xoshiro256StarStar

ALPHA_FLOOR = 1e-8


class LdaError(Exception):
    pass


class InvalidK(LdaError):
    def __init__(self, k: int):
        super().__init__(f"topic count must be >= 1, got {k}")


class EmptyDocument(LdaError):
    def __init__(self, index: int):
        super().__init__(f"document {index} is empty")


@dataclass(frozen=True)
class Dictionary:
    """Dense id space over unigrams and underscore-joined bigrams."""

    entries: tuple[str, ...]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            object.__setattr__(
                self, "index", {entry: i for i, entry in enumerate(self.entries)}
            )

    def __len__(self) -> int:
        return len(self.entries)


def build_dictionary(
    subcorpus: SubCorpus, min_bigram_count: int = 20
) -> tuple[Dictionary, list[list[int]]]:
    """Build the dictionary and encode the sub-corpus documents.

    Unigram entries appear in first-occurrence order, followed by every
    within-sentence adjacent bigram reaching min_bigram_count occurrences
    across the sub-corpus (also first-occurrence order). Encoding walks
    each document left to right emitting the unigram id at each position
    and, when the pair ending there qualifies, the bigram id right after.
    Documents left empty by preprocessing are dropped from the encoding.
    """
    docs = [
        [(tok.normalized, tok.sentence_index) for tok in doc]
        for doc in subcorpus.documents
        if doc
    ]
    if not docs:
        raise EmptyCorpus("no non-empty documents to encode")

    unigrams: list[str] = []
    seen: set[str] = set()
    bigram_counts: dict[str, int] = {}
    bigram_order: list[str] = []
    for doc in docs:
        for i, (word, sentence) in enumerate(doc):
            if word not in seen:
                seen.add(word)
                unigrams.append(word)
            if i > 0 and doc[i - 1][1] == sentence:
                bigram = f"{doc[i - 1][0]}_{word}"
                if bigram not in bigram_counts:
                    bigram_order.append(bigram)
                bigram_counts[bigram] = bigram_counts.get(bigram, 0) + 1

    entries = unigrams + [b for b in bigram_order if bigram_counts[b] >= min_bigram_count]
    dictionary = Dictionary(entries=tuple(entries))
    index = dictionary.index

    encoded = []
    for doc in docs:
        ids = []
        for i, (word, sentence) in enumerate(doc):
            ids.append(index[word])
            if i > 0 and doc[i - 1][1] == sentence:
                bigram = f"{doc[i - 1][0]}_{word}"
                bigram_id = index.get(bigram)
                if bigram_id is not None:
                    ids.append(bigram_id)
        encoded.append(ids)
    return dictionary, encoded


@dataclass
class LdaModel:
    k: int
    alpha: list[float]
    beta: float
    topic_word_counts: list[list[int]]
    doc_topic_counts: list[list[int]]
    seed: int
    dictionary: Dictionary | None = None

    @property
    def vocab_size(self) -> int:
        return len(self.topic_word_counts[0])

    def topic_totals(self) -> list[int]:
        return [sum(row) for row in self.topic_word_counts]

    def phi(self) -> list[list[float]]:
        """Smoothed topic-word distribution rows (each sums to 1)."""
        v = self.vocab_size
        rows = []
        for row, total in zip(self.topic_word_counts, self.topic_totals()):
            denom = total + v * self.beta
            rows.append([(count + self.beta) / denom for count in row])
        return rows


@dataclass(frozen=True)
class TopicTermList:
    topic_id: int
    terms: tuple[tuple[str, float], ...]


class SweepState:
    """Read-only view handed to the on_sweep callback for instrumentation."""

    __slots__ = ("sweep", "alpha", "topic_word_counts", "doc_topic_counts", "topic_totals")

    def __init__(self, sweep, alpha, topic_word_counts, doc_topic_counts, topic_totals):
        self.sweep = sweep
        self.alpha = alpha
        self.topic_word_counts = topic_word_counts
        self.doc_topic_counts = doc_topic_counts
        self.topic_totals = topic_totals


def _minka_step(alpha: list[float], doc_topic_counts: list[list[int]]) -> list[float]:
    """One fixed-point iteration of Minka's digamma update for alpha."""
    n_docs = len(doc_topic_counts)
    doc_lengths = [sum(row) for row in doc_topic_counts]
    alpha_sum = sum(alpha)
    denom = sum(digamma(n + alpha_sum) for n in doc_lengths) - n_docs * digamma(alpha_sum)
    updated = []
    for t, a in enumerate(alpha):
        numer = sum(digamma(row[t] + a) for row in doc_topic_counts) - n_docs * digamma(a)
        value = a * numer / denom if denom > 0 else a
        updated.append(max(float(value), ALPHA_FLOOR))
    return updated


def gibbs_train(
    docs: Sequence[Sequence[int]],
    k: int,
    seed: int,
    sweeps: int = 500,
    burn_in: int = 50,
    hyper_update_every: int = 10,
    beta: float = 0.01,
    vocab_size: int | None = None,
    dictionary: Dictionary | None = None,
    on_sweep: Callable[[SweepState], None] | None = None,
) -> LdaModel:
    """Train one model; identical arguments yield identical count matrices.

    Initial assignments are uniform draws from the seeded generator, taken
    in document order then token order. After burn_in, alpha gets one
    Minka fixed-point step at every sweep where (sweep - burn_in) is a
    positive multiple of hyper_update_every (sweeps count from 1); the
    components are floored at 1e-8. The returned counts are the final
    sweep's state.
    """
    if k < 1:
        raise InvalidK(k)
    docs = [list(d) for d in docs]
    if not docs:
        raise EmptyCorpus("no documents to train on")
    for i, doc in enumerate(docs):
        if not doc:
            raise EmptyDocument(i)
    if vocab_size is None:
        vocab_size = (len(dictionary) if dictionary is not None
                      else max(max(d) for d in docs) + 1)
    v = vocab_size

    rng = Xoshiro256StarStar(seed)
    alpha = [1.0 / k] * k

    n_dk = [[0] * k for _ in docs]
    n_kw = [[0] * v for _ in range(k)]
    n_k = [0] * k
    assignments = []
    for d_idx, doc in enumerate(docs):
        row = n_dk[d_idx]
        doc_z = []
        for word in doc:
            t = rng.randbelow(k)
            doc_z.append(t)
            row[t] += 1
            n_kw[t][word] += 1
            n_k[t] += 1
        assignments.append(doc_z)

    vbeta = v * beta
    topics = range(k)
    for sweep in range(1, sweeps + 1):
        for d_idx, doc in enumerate(docs):
            row = n_dk[d_idx]
            doc_z = assignments[d_idx]
            for pos, word in enumerate(doc):
                old = doc_z[pos]
                row[old] -= 1
                n_kw[old][word] -= 1
                n_k[old] -= 1

                cumulative = 0.0
                weights = []
                for t in topics:
                    cumulative += (
                        (row[t] + alpha[t])
                        * (n_kw[t][word] + beta)
                        / (n_k[t] + vbeta)
                    )
                    weights.append(cumulative)
                target = rng.random() * cumulative
                new = 0
                while weights[new] <= target and new < k - 1:
                    new += 1

                doc_z[pos] = new
                row[new] += 1
                n_kw[new][word] += 1
                n_k[new] += 1

        if sweep > burn_in and (sweep - burn_in) % hyper_update_every == 0:
            alpha = _minka_step(alpha, n_dk)
        if on_sweep is not None:
            on_sweep(SweepState(sweep, list(alpha), n_kw, n_dk, list(n_k)))

    return LdaModel(
        k=k,
        alpha=alpha,
        beta=beta,
        topic_word_counts=n_kw,
        doc_topic_counts=n_dk,
        seed=seed,
        dictionary=dictionary,
    )


def _ranked_word_ids(model: LdaModel, topic: int, top_n: int) -> list[int]:
    phi_row = model.phi()[topic]
    order = sorted(range(len(phi_row)), key=lambda w: (-phi_row[w], w))
    return order[:top_n]


def umass_coherence(
    model: LdaModel, docs: Sequence[Sequence[int]], top_n: int = 10
) -> tuple[list[float], float]:
    """Per-topic and mean UMass coherence over each topic's top words.

    For every word pair the contribution is ln((D(w_a, w_b) + 1) / D(w_a))
    where w_a is the higher-ranked word of the pair and D counts documents
    containing a word (or both words).
    """
    doc_sets = [frozenset(doc) for doc in docs]
    per_topic = []
    for topic in range(model.k):
        top = _ranked_word_ids(model, topic, top_n)
        score = 0.0
        for a in range(len(top)):
            d_a = sum(1 for s in doc_sets if top[a] in s)
            for b in range(a + 1, len(top)):
                d_ab = sum(1 for s in doc_sets if top[a] in s and top[b] in s)
                score += math.log((d_ab + 1) / d_a)
        per_topic.append(score)
    mean = sum(per_topic) / len(per_topic)
    return per_topic, mean


def select_topic_count(
    docs: Sequence[Sequence[int]],
    k_range: Iterable[int] = range(1, 6),
    seed: int = 0,
    sweeps: int = 500,
    burn_in: int = 50,
    hyper_update_every: int = 10,
    beta: float = 0.01,
    vocab_size: int | None = None,
    dictionary: Dictionary | None = None,
    coherence_top_n: int = 10,
) -> LdaModel:
    """Train one model per k (seed offset by k) and keep the one with the
    highest mean UMass coherence; exact ties go to the smaller k."""
    ks = sorted(set(k_range))
    if not ks:
        raise ValueError("k_range is empty")
    best_model = None
    best_score = -math.inf
    for k in ks:
        model = gibbs_train(
            docs,
            k,
            seed + k,
            sweeps=sweeps,
            burn_in=burn_in,
            hyper_update_every=hyper_update_every,
            beta=beta,
            vocab_size=vocab_size,
            dictionary=dictionary,
        )
        _, mean = umass_coherence(model, docs, top_n=coherence_top_n)
        if mean > best_score:
            best_score = mean
            best_model = model
    return best_model


def topic_terms(
    model: LdaModel, raw_top: int = 20, keep_fraction: float = 0.6
) -> list[TopicTermList]:
    """Top terms per topic: rank by phi, take raw_top, keep the top
    ceil(keep_fraction * count). Bigram surfaces regain their space."""
    if model.dictionary is None:
        raise ValueError("model has no dictionary attached")
    results = []
    phi = model.phi()
    for topic in range(model.k):
        ranked = _ranked_word_ids(model, topic, raw_top)
        keep = math.ceil(keep_fraction * len(ranked))
        terms = tuple(
            (model.dictionary.entries[w].replace("_", " "), phi[topic][w])
            for w in ranked[:keep]
        )
        results.append(TopicTermList(topic_id=topic, terms=terms))
    return results


def save_model(model: LdaModel, path: str | Path) -> None:
    if model.dictionary is None:
        raise ValueError("model has no dictionary attached")
    payload = {
        "k": model.k,
        "alpha": model.alpha,
        "beta": model.beta,
        "seed": model.seed,
        "dictionary": list(model.dictionary.entries),
        "topic_word_counts": model.topic_word_counts,
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path) -> LdaModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return LdaModel(
        k=payload["k"],
        alpha=list(payload["alpha"]),
        beta=payload["beta"],
        topic_word_counts=[list(row) for row in payload["topic_word_counts"]],
        doc_topic_counts=[],
        seed=payload["seed"],
        dictionary=Dictionary(entries=tuple(payload["dictionary"])),
    )
