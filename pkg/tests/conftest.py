"""Shared fixtures and independent reference implementations.

The reference generator below is written from the rng module's docstring
alone, deliberately in a different style (closures over explicit state
tuples instead of a class), so the two can only agree by implementing the
same algorithm.
"""

from pathlib import Path

import pytest

from taxokit.corpus import (
    PassthroughPosProvider,
    SubCorpus,
    preprocess,
    tokenize,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).resolve().parent / "fixtures"

_M64 = (1 << 64) - 1


def ref_splitmix64_stream(seed):
    state = seed & _M64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        yield (z ^ (z >> 31)) & _M64


def _ref_rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _M64


def ref_xoshiro_stream(seed=None, state=None):
    """Yields xoshiro256** outputs; seed via SplitMix64 or explicit state."""
    if state is None:
        sm = ref_splitmix64_stream(seed)
        state = (next(sm), next(sm), next(sm), next(sm))
    s0, s1, s2, s3 = state
    while True:
        yield (_ref_rotl((s1 * 5) & _M64, 7) * 9) & _M64
        t = (s1 << 17) & _M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _ref_rotl(s3, 45)


class RefRng:
    """Reference draw logic layered over the stream generator."""

    def __init__(self, seed):
        self._stream = ref_xoshiro_stream(seed=seed)

    def next_u64(self):
        return next(self._stream)

    def random(self):
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n):
        limit = (1 << 64) - ((1 << 64) % n)
        u = self.next_u64()
        while u >= limit:
            u = self.next_u64()
        return u % n

    def sample(self, seq, m):
        items = list(seq)
        n = len(items)
        for i in range(m):
            j = i + self.randbelow(n - i)
            items[i], items[j] = items[j], items[i]
        return items[:m]


def two_cluster_docs():
    """40 synthetic documents over two disjoint 5-word vocabularies.

    Cluster A uses even word ids with per-document repeats 10, 8, 6, 4, 2;
    cluster B uses odd ids with repeats 9, 7, 5, 3, 1. Every document
    contains all five words of its own cluster and none of the other, so
    any pure topic ranks only own-cluster words, while a topic with no
    tokens falls back to word-id order for its top words, which mixes the
    clusters and collapses its coherence.
    """
    docs = []
    for _ in range(20):
        doc = []
        for j in range(5):
            doc.extend([2 * j] * (10 - 2 * j))
        docs.append(doc)
    for _ in range(20):
        doc = []
        for j in range(5):
            doc.extend([2 * j + 1] * (9 - 2 * j))
        docs.append(doc)
    return docs


def make_subcorpus(texts, micro="test micro", macro="test macro", stopwords=frozenset()):
    """SubCorpus straight from raw description strings."""
    from collections import Counter

    pos = PassthroughPosProvider()
    docs = tuple(
        tuple(preprocess(tokenize(text), stopwords, pos)) for text in texts
    )
    vocab = Counter(tok.normalized for doc in docs for tok in doc)
    return SubCorpus(
        macro_category=macro, micro_category=micro, documents=docs, vocabulary=vocab
    )


@pytest.fixture(scope="session")
def repo_root():
    return REPO_ROOT


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES
