#!/usr/bin/env python3
"""Build data/mock_toy.json, the scripted provider for the bundled demo.

The script runs the two candidate-selection passes exactly the way the
pipeline will, then writes one mock entry per expected prompt:

  1. a parent answer per final taxonomy leaf (for the expansion benchmark),
  2. an abstaining catch-all for any other parent question,
  3. one term-separation reply per micro category (serves both passes:
     generic words end up in group 1, a few examples confirm group 2, and
     everything else defaults to related),
  4. one hierarchy reply per micro category, placing a curated subset of
     terms under two subcategory keys; the rest stay unplaced on purpose
     and fall back under the root, which is the pipeline's normal
     behavior for terms the reply ignores.

Entry order matters: the provider serves the first match, and only parent
prompts contain "father of", only separation prompts contain "no relation
to the topic", so each prompt family is fenced before the hierarchy
entries, which match on a term distinctive to their category.

Deterministic end to end; rerunning reproduces the file byte for byte.
"""

import json
import sys
from pathlib import Path

from taxokit import corpus as C
from taxokit.config import load_config
from taxokit.selection import SelectionParams, gather_candidates

GENERIC = {
    "qualidade", "atendimento", "delivery", "entrega", "cidade", "garantida",
    "primeiro", "lugar", "hora", "semana", "fim", "noite", "verdade",
}

# curated hierarchy per micro category; every leaf must be a pass-2
# candidate or the assertion below fires
CURATED = {
    "Brazilian Cuisine": {
        "match": "feijoada",
        "tree": {
            "churrasco": ["picanha", "brasa", "churrascaria"],
            "comida caseira": ["feijoada", "moqueca", "caipirinha", "brigadeiro", "sobremesa"],
        },
    },
    "Pizzeria": {
        "match": "margherita",
        "tree": {
            "pizza": ["pizza calabresa", "pizza margherita", "pizza mussarela", "borda recheada", "rodizio"],
            "forno lenha": ["massa", "tradicional", "pizzaria"],
        },
    },
    "Japanese Cuisine": {
        "match": "sashimi",
        "tree": {
            "sushi": ["sashimi", "temaki", "combinado"],
            "cardapio": ["yakisoba", "culinaria", "japones", "japonesa"],
        },
    },
    "Clothing and Accessories": {
        "match": "camisa",
        "tree": {
            "moda feminina": ["camisa", "vestido", "calca"],
            "acessorios": ["bolsa", "cinto"],
        },
    },
    "Jewelry Store": {
        "match": "pulseira",
        "tree": {
            "joias": ["anel", "colar", "brinco", "pulseira", "alianca"],
            "metais": ["ouro", "prata"],
        },
    },
}


def selection_params(cfg) -> SelectionParams:
    return SelectionParams(
        top_k=cfg.top_k, max_ngram=cfg.max_ngram, dedup_threshold=cfg.dedup_threshold,
        min_bigram_count=cfg.min_bigram_count, k_range=cfg.k_range, sweeps=cfg.sweeps,
        burn_in=cfg.burn_in, hyper_update_every=cfg.hyper_update_every, beta=cfg.beta,
        coherence_top_n=cfg.coherence_top_n, raw_top=cfg.raw_top,
        keep_fraction=cfg.keep_fraction,
    )


def main() -> int:
    root = Path(__file__).resolve().parent.parent
    cfg = load_config(root / "data" / "toy.ini")
    records = C.ingest_merchants(root / cfg.dataset_path)
    stop = C.load_stopwords(root / cfg.stopwords_path)
    pos = C.LexiconPosProvider.from_file(root / cfg.pos_lexicon_path)
    params = selection_params(cfg)

    # pass 1: unfiltered candidates give the group-1 (generic) lists
    grouped = C.build_subcorpora(records, stop, pos)
    group1 = {}
    filters: dict[str, set[str]] = {}
    for macro, micros in grouped.items():
        for micro, sub in micros.items():
            cands = gather_candidates(sub, params, seed=cfg.seed)
            g1 = [t for t in cands if C.normalize_term(t) in GENERIC]
            group1[micro] = g1
            filters.setdefault(macro, set()).update(C.normalize_term(t) for t in g1)

    # pass 2: filtered candidates are what the hierarchy prompt will carry
    pass2 = {}
    for macro, words in filters.items():
        gf = C.GenericWordFilter(macro_category=macro, words=frozenset(words))
        sub2 = C.build_subcorpora(
            [r for r in records if r.macro_category == macro], stop, pos, gf
        )
        for micro, sub in sub2[macro].items():
            pass2[micro] = gather_candidates(sub, params, seed=cfg.seed)

    parent_entries = []
    separation_entries = []
    hierarchy_entries = []
    seen_parent_matches = set()

    def add_parent(term: str, parent: str) -> None:
        match = f"father of {term}?"
        if match in seen_parent_matches:
            return
        seen_parent_matches.add(match)
        parent_entries.append({"match": match, "reply": f"O pai é {parent}."})

    for micro, spec in CURATED.items():
        cands2 = pass2[micro]
        norm2 = {C.normalize_term(t) for t in cands2}
        leaf_norms = set()
        key_norms = set()
        for key, leaves in spec["tree"].items():
            key_norms.add(C.normalize_term(key))
            for leaf in leaves:
                assert C.normalize_term(leaf) in norm2, (
                    f"{micro}: curated leaf {leaf!r} is not a pass-2 candidate; "
                    f"regenerate the corpus or adjust CURATED"
                )
                leaf_norms.add(C.normalize_term(leaf))
                add_parent(leaf, key)
        # terms the hierarchy reply ignores become children of the root
        for term in cands2:
            norm = C.normalize_term(term)
            if norm not in leaf_norms and norm not in key_norms:
                add_parent(term, micro)

        exemplars = [leaf for leaves in spec["tree"].values() for leaf in leaves][:5]
        separation_entries.append(
            {
                "match": f"no relation to the topic {micro}",
                "reply": (
                    "Grupo 1: " + ", ".join(group1[micro]) + ".\n"
                    "Grupo 2: " + ", ".join(exemplars) + "."
                ),
            }
        )
        hierarchy_entries.append(
            {
                "match": spec["match"],
                "reply": (
                    "Aqui está a hierarquia pedida:\n"
                    + json.dumps(spec["tree"], ensure_ascii=False, indent=2)
                    + "\nEspero que ajude."
                ),
            }
        )

    entries = (
        parent_entries
        + [{"match": "Who is the father of", "reply": "Não sei."}]
        + separation_entries
        + hierarchy_entries
    )
    out = root / "data" / "mock_toy.json"
    out.write_text(
        json.dumps(entries, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(entries)} mock entries to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
