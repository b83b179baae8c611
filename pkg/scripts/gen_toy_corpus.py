#!/usr/bin/env python3
"""Generate the bundled merchant corpus at data/toy_corpus.csv.

Five micro categories under two macro categories, 120 records total.
Descriptions are assembled from sentence templates so that each category
has a few distinctive high-frequency terms, every category shares the
same handful of generic service words (qualidade, atendimento, delivery,
entrega), and the pizzeria corpus repeats "forno a lenha" often enough
for the bigram to clear the default frequency threshold. Fully
deterministic: rerunning reproduces the file byte for byte.
"""

import csv
import sys
from pathlib import Path

from taxokit.rng import Xoshiro256StarStar

GENERIC_SENTENCES = [
    "Qualidade e atendimento em primeiro lugar.",
    "Delivery e entrega para toda cidade.",
    "Atendimento com qualidade, peça por delivery.",
    "Entrega garantida e atendimento com qualidade.",
]

# name pools
FIRST = ["Ana", "Bruno", "Carla", "Diego", "Elisa", "Fábio", "Gabriela", "Hugo"]
PLACE = ["Centro", "Jardim", "Vila Nova", "Bairro Alto", "Estação", "Praça"]

CATEGORIES = [
    {
        "macro": "Food",
        "micro": "Brazilian Cuisine",
        "count": 30,
        "name": "Cantina {first} do {place}",
        "s1": [
            "Restaurante de comida caseira, servimos feijoada completa.",
            "Churrascaria com picanha na brasa e feijoada.",
            "Restaurante brasileiro, feijoada e churrasco no fim de semana.",
            "Comida caseira deliciosa, moqueca e feijoada.",
        ],
        "s2": [
            "Picanha, churrasco e caipirinha.",
            "Feijoada no sábado, brigadeiro de sobremesa.",
            "Moqueca baiana, churrasco e caipirinha especial.",
            "Temos picanha, brigadeiro e caipirinha.",
        ],
    },
    {
        "macro": "Food",
        "micro": "Pizzeria",
        "count": 25,
        "name": "Pizzaria {first} da {place}",
        "s1": [
            "Pizzaria tradicional com forno a lenha.",
            "Pizzas no forno a lenha, massa fresca.",
            "A melhor pizza da cidade, forno a lenha de verdade.",
            "Forno a lenha e rodízio de pizza toda noite.",
        ],
        "s2": [
            "Pizza calabresa e pizza margherita.",
            "Pizza mussarela, pizza calabresa e borda recheada.",
            "Rodízio de pizza com borda recheada.",
            "Experimente pizza margherita e pizza mussarela.",
        ],
    },
    {
        "macro": "Food",
        "micro": "Japanese Cuisine",
        "count": 20,
        "name": "Sushi {first} {place}",
        "s1": [
            "Culinária japonesa, sushi e sashimi frescos.",
            "Restaurante japonês, servimos sushi e temaki.",
            "Sushi, sashimi e combinado especial.",
            "Cardápio japonês completo, sushi e yakisoba.",
        ],
        "s2": [
            "Temaki, yakisoba e combinado.",
            "Sashimi fresco e temaki na hora.",
            "Combinado grande, sushi e sashimi.",
            "Yakisoba, temaki e sushi para delivery.",
        ],
    },
    {
        "macro": "Shopping",
        "micro": "Clothing and Accessories",
        "count": 25,
        "name": "Moda {first} {place}",
        "s1": [
            "Loja de moda feminina, camisa e vestido.",
            "Vendemos camisa, vestido e calça.",
            "Moda feminina e masculina, vestido novo toda semana.",
            "Camisa, calça e acessórios para todos.",
        ],
        "s2": [
            "Acessórios, bolsa e cinto.",
            "Vestido, bolsa e camisa linda.",
            "Calça, cinto e acessórios da moda.",
            "Bolsa nova, vestido e camisa.",
        ],
    },
    {
        "macro": "Shopping",
        "micro": "Jewelry Store",
        "count": 20,
        "name": "Joalheria {first} do {place}",
        "s1": [
            "Joalheria com anel e colar de prata.",
            "Anel de ouro, colar e brinco.",
            "Joalheria tradicional, aliança de ouro e prata.",
            "Vendemos anel, pulseira e colar.",
        ],
        "s2": [
            "Brinco, pulseira e aliança.",
            "Pulseira de prata e brinco de ouro.",
            "Aliança perfeita, anel e brinco.",
            "Colar, pulseira e anel de prata.",
        ],
    },
]

# one merchant per macro keeps an empty description on purpose, to show
# that undescribed records survive ingestion but are skipped by modeling
EMPTY_DESCRIPTION_IDS = {"M0007", "M0093"}


def main() -> int:
    rng = Xoshiro256StarStar(7)
    rows = []
    serial = 0
    for cat in CATEGORIES:
        for i in range(cat["count"]):
            serial += 1
            merchant_id = f"M{serial:04d}"
            name = cat["name"].format(
                first=FIRST[rng.randbelow(len(FIRST))],
                place=PLACE[rng.randbelow(len(PLACE))],
            )
            s1 = cat["s1"][i % len(cat["s1"])]
            s2 = cat["s2"][rng.randbelow(len(cat["s2"]))]
            s3 = GENERIC_SENTENCES[rng.randbelow(len(GENERIC_SENTENCES))]
            description = f"{s1} {s2} {s3}"
            if merchant_id in EMPTY_DESCRIPTION_IDS:
                description = ""
            rows.append(
                {
                    "merchant_id": merchant_id,
                    "merchant_name": name,
                    "macro_category": cat["macro"],
                    "micro_category": cat["micro"],
                    "description": description,
                    "transaction_count": 50 + rng.randbelow(4951),
                }
            )

    out = Path(__file__).resolve().parent.parent / "data" / "toy_corpus.csv"
    with out.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} records to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
