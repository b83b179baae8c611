import textwrap

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taxokit.corpus import (
    DuplicateId,
    EmptyCorpus,
    GenericWordFilter,
    LexiconPosProvider,
    MissingField,
    PassthroughPosProvider,
    build_generic_filter,
    build_subcorpora,
    ingest_merchants,
    load_stopwords,
    normalize_term,
    normalize_text,
    preprocess,
    tokenize,
)
from taxokit.llm import SeparationResult
from taxokit.selection import SelectionParams

from conftest import make_subcorpus

FAST_SELECTION = SelectionParams(sweeps=40, burn_in=10, k_range=(1, 2))


# ---------------------------------------------------------- normalization

def test_normalize_folds_case_and_diacritics():
    assert normalize_text("Feijão À MODA") == "feijao a moda"
    assert normalize_text("pão-de-açúcar") == "pao-de-acucar"


def test_normalize_term_collapses_whitespace():
    assert normalize_term("  Forno   a\tLenha ") == "forno a lenha"


@given(st.text(max_size=80))
@settings(max_examples=200)
def test_normalize_text_is_idempotent(text):
    once = normalize_text(text)
    assert normalize_text(once) == once


# --------------------------------------------------------------- tokenize

def test_tokenize_sentences_and_positions():
    tokens = tokenize("Pizza boa. Entrega rápida!\nSó hoje?")
    triples = [(t.normalized, t.sentence_index, t.position_in_sentence) for t in tokens]
    assert triples == [
        ("pizza", 0, 0),
        ("boa", 0, 1),
        ("entrega", 1, 0),
        ("rapida", 1, 1),
        ("so", 2, 0),
        ("hoje", 2, 1),
    ]


def test_tokenize_empty_sentences_consume_no_index():
    tokens = tokenize("... !!! Pizza. ?? Massa.")
    assert [(t.normalized, t.sentence_index) for t in tokens] == [
        ("pizza", 0),
        ("massa", 1),
    ]


def test_tokenize_keeps_hyphens_and_digits():
    tokens = tokenize("Loja 24-horas abre 7 dias")
    assert [t.surface for t in tokens] == ["Loja", "24-horas", "abre", "7", "dias"]


@given(st.text(max_size=120))
@settings(max_examples=200)
def test_tokenize_invariants(text):
    tokens = tokenize(text)
    last = (0, -1)
    for tok in tokens:
        assert tok.surface
        assert all(ch.isalnum() or ch == "-" for ch in tok.surface)
        key = (tok.sentence_index, tok.position_in_sentence)
        assert key > last, "tokens must advance in reading order"
        last = key


# -------------------------------------------------------------- ingestion

CSV_HEADER = "merchant_id,merchant_name,macro_category,micro_category,description,transaction_count\n"


def write_csv(tmp_path, rows):
    path = tmp_path / "merchants.csv"
    path.write_text(CSV_HEADER + "".join(rows), encoding="utf-8")
    return path


def test_ingest_keeps_file_order_and_empty_descriptions(tmp_path):
    path = write_csv(
        tmp_path,
        [
            'm1,Loja A,Food,Pizzeria,"Pizza boa.",10\n',
            "m2,Loja B,Food,Pizzeria,,5\n",
        ],
    )
    records = ingest_merchants(path)
    assert [r.merchant_id for r in records] == ["m1", "m2"]
    assert records[0].has_description
    assert not records[1].has_description


def test_ingest_rejects_duplicate_ids(tmp_path):
    path = write_csv(
        tmp_path,
        ["m1,A,Food,Pizzeria,x,1\n", "m1,B,Food,Pizzeria,y,2\n"],
    )
    with pytest.raises(DuplicateId):
        ingest_merchants(path)


@pytest.mark.parametrize(
    "row",
    [
        ",A,Food,Pizzeria,x,1\n",          # empty id
        "m1,,Food,Pizzeria,x,1\n",         # empty name
        "m1,A,,Pizzeria,x,1\n",            # empty macro
        "m1,A,Food,,x,1\n",                # empty micro
        "m1,A,Food,Pizzeria,x,\n",         # empty count
        "m1,A,Food,Pizzeria,x,ten\n",      # non-integer count
        "m1,A,Food,Pizzeria,x,-3\n",       # negative count
    ],
)
def test_ingest_rejects_bad_rows(tmp_path, row):
    with pytest.raises(MissingField):
        ingest_merchants(write_csv(tmp_path, [row]))


def test_ingest_jsonl(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        '{"merchant_id": "j1", "merchant_name": "A", "macro_category": "Food", '
        '"micro_category": "Pizzeria", "description": "Pizza.", "transaction_count": 3}\n',
        encoding="utf-8",
    )
    records = ingest_merchants(path, format="jsonl")
    assert records[0].merchant_id == "j1"
    assert records[0].transaction_count == 3


def test_cap_per_macro_keeps_top_by_transactions_in_file_order(tmp_path):
    rows = [
        "m1,A,Food,Pizzeria,x,5\n",
        "m2,B,Food,Pizzeria,x,9\n",
        "m3,C,Food,Pizzeria,x,9\n",   # tie with m2: earlier row wins over later
        "m4,D,Food,Pizzeria,x,1\n",
        "m5,E,Shopping,Jewelry Store,x,1\n",
    ]
    records = ingest_merchants(write_csv(tmp_path, rows), max_merchants_per_macro=2)
    assert [r.merchant_id for r in records] == ["m2", "m3", "m5"]


# ---------------------------------------------------------- preprocessing

def test_load_stopwords_strips_comments(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("a  # artigo\n# só comentário\nDe\n\n", encoding="utf-8")
    assert load_stopwords(path) == frozenset({"a", "de"})


def test_lexicon_votes_and_fallback(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text(
        "bom\tADJ\nbom\tNOUN\nbom\tNOUN\ncorre\tVERB\n", encoding="utf-8"
    )
    provider = LexiconPosProvider.from_file(path)
    tag = lambda word: provider.tag(tokenize(word)[0])
    assert tag("bom") == "NOUN"      # two votes beat one
    assert tag("corre") == "VERB"
    assert tag("pizza") == "NOUN"    # unknown words fall back to NOUN


def test_lexicon_tie_breaks_toward_first_appearance(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("alta\tADJ\nalta\tNOUN\n", encoding="utf-8")
    provider = LexiconPosProvider.from_file(path)
    assert provider.tag(tokenize("alta")[0]) == "ADJ"


def test_preprocess_removes_and_keeps_positions(tmp_path):
    lex = tmp_path / "lex.tsv"
    lex.write_text("deliciosa\tADJ\nservimos\tVERB\n", encoding="utf-8")
    provider = LexiconPosProvider.from_file(lex)
    tokens = tokenize("Servimos pizza deliciosa de calabresa.")
    kept = preprocess(tokens, frozenset({"de"}), provider)
    assert [(t.normalized, t.position_in_sentence) for t in kept] == [
        ("pizza", 1),
        ("calabresa", 4),
    ]


def test_preprocess_applies_generic_filter():
    tokens = tokenize("Qualidade e pizza")
    gfilter = GenericWordFilter("Food", frozenset({"qualidade"}))
    kept = preprocess(tokens, frozenset({"e"}), PassthroughPosProvider(), gfilter)
    assert [t.normalized for t in kept] == ["pizza"]


def test_generic_filter_contains_normalizes():
    gfilter = GenericWordFilter("Food", frozenset({"qualidade"}))
    assert "QUALIDADE" in gfilter
    assert "quálidade" in gfilter
    assert "pizza" not in gfilter


def test_generic_filter_roundtrip(tmp_path):
    gfilter = GenericWordFilter("Food", frozenset({"b", "a", "c"}))
    path = tmp_path / "filter.txt"
    gfilter.save(path)
    assert path.read_text(encoding="utf-8") == "a\nb\nc\n"
    loaded = GenericWordFilter.load(path, macro_category="Food")
    assert loaded.words == gfilter.words


# ------------------------------------------------------------ sub-corpora

def test_build_subcorpora_groups_and_counts(tmp_path):
    rows = [
        'f1,A,Food,Pizzeria,"Pizza de calabresa. Pizza boa.",1\n',
        "f2,B,Food,Pizzeria,Massa fresca,1\n",
        "f3,C,Food,Japanese Cuisine,Sushi,1\n",
        "f4,D,Food,Pizzeria,,1\n",  # no description: not part of any corpus
    ]
    records = ingest_merchants(write_csv(tmp_path, rows))
    grouped = build_subcorpora(records, frozenset({"de"}), PassthroughPosProvider())
    assert set(grouped) == {"Food"}
    assert set(grouped["Food"]) == {"Pizzeria", "Japanese Cuisine"}
    pizzeria = grouped["Food"]["Pizzeria"]
    assert len(pizzeria.documents) == 2
    assert pizzeria.vocabulary["pizza"] == 2
    assert pizzeria.vocabulary["massa"] == 1


class RecordingGateway:
    """separate_terms stub: first group = terms listed as generic."""

    def __init__(self, generic):
        self.generic = {normalize_term(g) for g in generic}
        self.calls = []

    def separate_terms(self, terms, topic):
        self.calls.append((tuple(terms), topic))
        unrelated = tuple(t for t in terms if normalize_term(t) in self.generic)
        related = tuple(t for t in terms if normalize_term(t) not in self.generic)
        return SeparationResult(unrelated=unrelated, related=related)


def test_build_generic_filter_unions_micros():
    corpus_a = make_subcorpus(
        ["Qualidade e pizza calabresa. Entrega de pizza."], micro="Pizzeria", macro="Food"
    )
    corpus_b = make_subcorpus(
        ["Qualidade no sushi. Sushi fresco todo dia aqui."], micro="Japanese Cuisine", macro="Food"
    )
    gateway = RecordingGateway(["qualidade", "entrega"])
    gfilter = build_generic_filter(
        {"Pizzeria": corpus_a, "Japanese Cuisine": corpus_b},
        gateway,
        params=FAST_SELECTION,
    )
    assert gfilter.macro_category == "Food"
    assert "qualidade" in gfilter.words
    assert "entrega" in gfilter.words
    # micros are visited in sorted order
    assert [topic for _, topic in gateway.calls] == ["Japanese Cuisine", "Pizzeria"]


def test_build_generic_filter_skips_empty_subcorpus():
    empty = make_subcorpus([], micro="Empty", macro="Food")
    full = make_subcorpus(
        ["Pizza calabresa com qualidade e mais pizza."], micro="Pizzeria", macro="Food"
    )
    gateway = RecordingGateway(["qualidade"])
    gfilter = build_generic_filter(
        {"Empty": empty, "Pizzeria": full}, gateway, params=FAST_SELECTION
    )
    assert [topic for _, topic in gateway.calls] == ["Pizzeria"]
    assert "qualidade" in gfilter.words


def test_empty_corpus_error_has_corpus_base():
    from taxokit.corpus import CorpusError

    assert issubclass(EmptyCorpus, CorpusError)
