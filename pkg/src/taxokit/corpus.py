"""Merchant ingestion, tokenization, preprocessing, and sub-corpus assembly.

Descriptions are tokenized into sentence-indexed tokens, filtered by stop
words and part-of-speech category, grouped into one sub-corpus per micro
category, and optionally cleaned with a per-macro-category generic-word
filter built from a first candidate-selection pass.
"""

from __future__ import annotations

import csv
import json
import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Protocol

if TYPE_CHECKING:
    from .llm import LlmGateway
    from .selection import SelectionParams

log = logging.getLogger(__name__)

# Universal POS categories excluded from every sub-corpus. Tokens tagged
# NOUN, NUM, X, or UNKNOWN survive; everything here is dropped.
REMOVED_POS = frozenset({
    "ADV", "CCONJ", "ADP", "AUX", "CONJ", "DET", "INTJ", "PART",
    "PRON", "PUNCT", "SYM", "SCONJ", "ADJ", "VERB", "PROPN",
})

UNKNOWN = "UNKNOWN"

_SENTENCE_BREAKS = frozenset(".!?\n")

REQUIRED_FIELDS = (
    "merchant_id",
    "merchant_name",
    "macro_category",
    "micro_category",
    "description",
    "transaction_count",
)


class CorpusError(Exception):
    pass


class EmptyCorpus(CorpusError):
    """Sub-corpus has no retained tokens (or no non-empty documents)."""


class MissingField(CorpusError):
    def __init__(self, row: int, field_name: str, detail: str = ""):
        self.row = row
        self.field_name = field_name
        msg = f"row {row}: missing or invalid field '{field_name}'"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DuplicateId(CorpusError):
    def __init__(self, merchant_id: str):
        self.merchant_id = merchant_id
        super().__init__(f"duplicate merchant_id '{merchant_id}'")


class UnreadableFile(CorpusError):
    pass


def normalize_text(s: str) -> str:
    """Lowercase and strip diacritics (NFD fold, drop combining marks).

    Idempotent: normalize_text(normalize_text(s)) == normalize_text(s).
    """
    decomposed = unicodedata.normalize("NFD", s.lower())
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def normalize_term(s: str) -> str:
    """Normalization for multi-word terms: fold case/diacritics and
    collapse runs of whitespace to single spaces."""
    return " ".join(normalize_text(s).split())


@dataclass(frozen=True, slots=True)
class MerchantRecord:
    merchant_id: str
    merchant_name: str
    macro_category: str
    micro_category: str
    description: str
    transaction_count: int

    @property
    def has_description(self) -> bool:
        return bool(self.description.strip())


@dataclass(frozen=True, slots=True)
class Token:
    surface: str
    normalized: str
    sentence_index: int
    position_in_sentence: int
    pos_category: str = UNKNOWN


@dataclass(frozen=True)
class SubCorpus:
    """Retained tokens of every described merchant in one micro category.

    ``documents`` keeps one entry per source record (possibly empty after
    filtering) in ingestion order; ``vocabulary`` is the multiset of
    retained normalized tokens.
    """

    macro_category: str
    micro_category: str
    documents: tuple[tuple[Token, ...], ...]
    vocabulary: Counter = field(default_factory=Counter)

    def nonempty_documents(self) -> list[tuple[Token, ...]]:
        return [doc for doc in self.documents if doc]


@dataclass(frozen=True)
class GenericWordFilter:
    """Per-macro-category set of generic words, stored normalized.

    Membership tests fold their argument first, so any casing or diacritic
    variant of a member is recognized.
    """

    macro_category: str
    words: frozenset[str]

    def __contains__(self, word: str) -> bool:
        return normalize_text(word) in self.words

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            "".join(f"{w}\n" for w in sorted(self.words)), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path, macro_category: str = "") -> "GenericWordFilter":
        words = frozenset(
            normalize_text(line.strip())
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        return cls(macro_category=macro_category, words=words)


def _is_token_char(ch: str) -> bool:
    return ch.isalnum() or ch == "-"


def tokenize(text: str) -> list[Token]:
    """Split text into sentence-indexed tokens.

    Sentences break on '.', '!', '?', and newline; a sentence only counts
    (and consumes an index) if it produced at least one token. Tokens are
    maximal runs of letters, digits, and hyphens, in reading order.
    """
    tokens: list[Token] = []
    sentence = 0
    position = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _SENTENCE_BREAKS:
            if position > 0:
                sentence += 1
                position = 0
            i += 1
            continue
        if _is_token_char(ch):
            j = i
            while j < n and _is_token_char(text[j]):
                j += 1
            surface = text[i:j]
            tokens.append(
                Token(
                    surface=surface,
                    normalized=normalize_text(surface),
                    sentence_index=sentence,
                    position_in_sentence=position,
                )
            )
            position += 1
            i = j
        else:
            i += 1
    return tokens


class PosProvider(Protocol):
    def tag(self, token: Token) -> str: ...


class PassthroughPosProvider:
    """Tags every token NOUN, so POS-category removal is a no-op."""

    def tag(self, token: Token) -> str:
        return "NOUN"


class LexiconPosProvider:
    """Lookup tagger over a ``word<TAB>POS`` lexicon file.

    Repeated entries for one word vote; the most frequent tag wins, ties
    broken by first appearance in the file. Words absent from the lexicon
    fall back to NOUN.
    """

    def __init__(self, lexicon: dict[str, str]):
        self._lexicon = lexicon

    @classmethod
    def from_file(cls, path: str | Path) -> "LexiconPosProvider":
        votes: dict[str, Counter] = {}
        first_seen: dict[tuple[str, str], int] = {}
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise UnreadableFile(f"cannot read POS lexicon {path}: {exc}") from exc
        for lineno, line in enumerate(lines):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise UnreadableFile(
                    f"{path}:{lineno + 1}: expected 'word<TAB>POS', got {line!r}"
                )
            word, tag = normalize_text(parts[0].strip()), parts[1].strip().upper()
            votes.setdefault(word, Counter())[tag] += 1
            first_seen.setdefault((word, tag), lineno)
        lexicon = {}
        for word, counter in votes.items():
            best = max(
                counter.items(),
                key=lambda item: (item[1], -first_seen[(word, item[0])]),
            )
            lexicon[word] = best[0]
        return cls(lexicon)

    def tag(self, token: Token) -> str:
        return self._lexicon.get(token.normalized, "NOUN")


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One word per line, '#' comments allowed; stored normalized."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot read stopword file {path}: {exc}") from exc
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(normalize_text(line))
    return frozenset(words)


def preprocess(
    tokens: Iterable[Token],
    stopwords: frozenset[str],
    pos_provider: PosProvider,
    generic_filter: GenericWordFilter | None = None,
) -> list[Token]:
    """Drop stop words, removed POS categories, and generic-filter words.

    Survivors keep their original sentence/position metadata (positions are
    not renumbered) and carry the category the provider assigned. Idempotent
    for fixed providers.
    """
    kept = []
    for token in tokens:
        if token.normalized in stopwords:
            continue
        category = pos_provider.tag(token)
        if category in REMOVED_POS:
            continue
        if generic_filter is not None and token.normalized in generic_filter.words:
            continue
        if category != token.pos_category:
            token = replace(token, pos_category=category)
        kept.append(token)
    return kept


def _record_from_mapping(row_num: int, data: dict) -> MerchantRecord:
    for name in REQUIRED_FIELDS:
        if name not in data or data[name] is None:
            raise MissingField(row_num, name)
        if name != "description" and str(data[name]).strip() == "":
            raise MissingField(row_num, name, "empty value")
    try:
        txn = int(str(data["transaction_count"]).strip())
    except ValueError:
        raise MissingField(row_num, "transaction_count", "not an integer") from None
    if txn < 0:
        raise MissingField(row_num, "transaction_count", "negative")
    return MerchantRecord(
        merchant_id=str(data["merchant_id"]).strip(),
        merchant_name=str(data["merchant_name"]).strip(),
        macro_category=str(data["macro_category"]).strip(),
        micro_category=str(data["micro_category"]).strip(),
        description=str(data["description"]),
        transaction_count=txn,
    )


def ingest_merchants(
    path: str | Path,
    format: str = "csv",
    max_merchants_per_macro: int = 50_000,
) -> list[MerchantRecord]:
    """Read merchant records from CSV (RFC-4180, header row) or JSONL.

    Records come back in file order. Rows with an empty description are
    kept (``has_description`` is False); duplicate merchant ids are an
    error. When a macro category holds more than ``max_merchants_per_macro``
    records, only the top ones by transaction count are kept (ties resolved
    toward earlier rows), still reported in file order.
    """
    path = Path(path)
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {format!r}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc

    records: list[MerchantRecord] = []
    if format == "csv":
        reader = csv.DictReader(text.splitlines())
        if reader.fieldnames is None:
            raise UnreadableFile(f"{path}: empty CSV")
        for row_num, row in enumerate(reader, start=2):
            row.pop(None, None)
            records.append(_record_from_mapping(row_num, row))
    else:
        for row_num, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise UnreadableFile(f"{path}:{row_num}: invalid JSON: {exc}") from exc
            records.append(_record_from_mapping(row_num, data))

    seen: set[str] = set()
    for rec in records:
        if rec.merchant_id in seen:
            raise DuplicateId(rec.merchant_id)
        seen.add(rec.merchant_id)

    return _cap_per_macro(records, max_merchants_per_macro)


def _cap_per_macro(records: list[MerchantRecord], cap: int) -> list[MerchantRecord]:
    by_macro: dict[str, list[int]] = {}
    for idx, rec in enumerate(records):
        by_macro.setdefault(rec.macro_category, []).append(idx)
    keep: set[int] = set()
    for indices in by_macro.values():
        if len(indices) <= cap:
            keep.update(indices)
        else:
            ranked = sorted(indices, key=lambda i: (-records[i].transaction_count, i))
            keep.update(ranked[:cap])
    return [rec for idx, rec in enumerate(records) if idx in keep]


def build_subcorpora(
    records: Iterable[MerchantRecord],
    stopwords: frozenset[str],
    pos_provider: PosProvider,
    generic_filter: GenericWordFilter | None = None,
) -> dict[str, dict[str, SubCorpus]]:
    """Group described merchants by macro then micro category and
    preprocess each description into a retained-token document.

    Returns {macro: {micro: SubCorpus}}; grouping preserves record order,
    so sub-corpus sizes partition the described-record count.
    """
    grouped: dict[str, dict[str, list[tuple[Token, ...]]]] = {}
    for rec in records:
        if not rec.has_description:
            continue
        tokens = preprocess(tokenize(rec.description), stopwords, pos_provider, generic_filter)
        grouped.setdefault(rec.macro_category, {}).setdefault(
            rec.micro_category, []
        ).append(tuple(tokens))

    result: dict[str, dict[str, SubCorpus]] = {}
    for macro, micros in grouped.items():
        result[macro] = {}
        for micro, docs in micros.items():
            vocab = Counter(tok.normalized for doc in docs for tok in doc)
            result[macro][micro] = SubCorpus(
                macro_category=macro,
                micro_category=micro,
                documents=tuple(docs),
                vocabulary=vocab,
            )
    return result


def build_generic_filter(
    macro_corpus: dict[str, SubCorpus],
    gateway: "LlmGateway",
    params: "SelectionParams | None" = None,
    seed: int = 0,
) -> GenericWordFilter:
    """First candidate-selection pass over one macro-category corpus.

    For each micro category, gathers candidate terms (keyword extraction
    merged with topic-model terms), asks the gateway to separate them from
    the micro-category topic, and collects the unrelated group. The filter
    is the union across micro categories. Separation replies that cannot
    be parsed exhaust the gateway's retry budget and raise
    UnparseableSeparation; provider errors propagate.
    """
    from .selection import SelectionParams, gather_candidates

    if params is None:
        params = SelectionParams()
    macro = next(iter(macro_corpus.values())).macro_category if macro_corpus else ""
    words: set[str] = set()
    for micro in sorted(macro_corpus):
        subcorpus = macro_corpus[micro]
        try:
            candidates = gather_candidates(subcorpus, params, seed=seed)
        except EmptyCorpus:
            log.info("generic filter: sub-corpus for %r is empty; skipped", micro)
            continue
        if not candidates:
            log.info("generic filter: no candidates for %r", micro)
            continue
        separation = gateway.separate_terms(candidates, micro)
        words.update(normalize_term(t) for t in separation.unrelated)
    return GenericWordFilter(macro_category=macro, words=frozenset(words))
