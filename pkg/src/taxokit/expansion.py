"""Taxonomy-expansion benchmark: hide leaves, predict their parents.

A trial hides round(hidden_fraction * leaf_count) leaves (half-up, seeded
sampling from the package generator), serializes the surviving tree as
prompt context, and asks one parent question per hidden term. Predictions
are matched against the true parent by normalized label.

Scoring convention: an abstention (no prediction) hurts recall but not
precision; precision = correct/answered, recall = correct/hidden,
F1 = 2PR/(P+R). When nothing was answered precision is reported as 0.0
with the undefined flag set.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import normalize_term
from .llm import GatewayError, LlmGateway, parse_parent, render
from .rng import Xoshiro256StarStar
from .taxonomy import Taxonomy, prune_leaves, to_prompt_context

log = logging.getLogger(__name__)

SCORING_NOTE = (
    "abstentions count against recall but not precision; "
    "precision = correct/answered, recall = correct/hidden, F1 = 2PR/(P+R)"
)


class TooFewLeaves(Exception):
    pass


class NoPredictions(Exception):
    pass


@dataclass(frozen=True, slots=True)
class Prediction:
    term: str
    true_parent: str
    predicted: str | None
    error: str | None = None


@dataclass
class ExpansionTrial:
    taxonomy_id: str
    seed: int
    hidden_fraction: float
    hidden: tuple[tuple[str, str], ...]
    context_prompt: str
    remaining_labels: tuple[str, ...]
    predictions: list[Prediction] = field(default_factory=list)


@dataclass(frozen=True)
class ExpansionScore:
    answered: int
    correct: int
    total_hidden: int
    precision: float
    recall: float
    f1: float
    precision_undefined: bool = False


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def make_trial(
    taxonomy: Taxonomy, seed: int, hidden_fraction: float = 0.2
) -> ExpansionTrial:
    """Hide a seeded sample of leaves and render the surviving context.

    Leaves are considered in ascending node-id order and sampled without
    replacement; the hidden list keeps the sampler's selection order.
    """
    if not 0 < hidden_fraction < 1:
        raise ValueError("hidden_fraction must be in (0, 1)")
    leaves = taxonomy.leaves()
    if len(leaves) < 5:
        raise TooFewLeaves(
            f"taxonomy {taxonomy.topic!r} has {len(leaves)} leaves; need >= 5"
        )
    count = round_half_up(hidden_fraction * len(leaves))
    rng = Xoshiro256StarStar(seed)
    chosen = rng.sample(leaves, count)
    hidden = tuple(
        (node.label, taxonomy.nodes[node.parent_id].label) for node in chosen
    )
    pruned = prune_leaves(taxonomy, [node.node_id for node in chosen])
    return ExpansionTrial(
        taxonomy_id=taxonomy.topic,
        seed=seed,
        hidden_fraction=hidden_fraction,
        hidden=hidden,
        context_prompt=to_prompt_context(pruned),
        remaining_labels=tuple(pruned.labels()),
    )


def run_trial(trial: ExpansionTrial, gateway: LlmGateway) -> ExpansionTrial:
    """One stateless completion per hidden term: context, newline, query.

    A gateway failure on one term records an abstention with the error
    note instead of aborting the trial.
    """
    trial.predictions = []
    for term, true_parent in trial.hidden:
        prompt = trial.context_prompt + "\n" + render("parent_query", {"new_term": term})
        predicted = None
        error = None
        try:
            exchange = gateway.complete(prompt)
            predicted = parse_parent(exchange.raw_reply, trial.remaining_labels)
        except GatewayError as exc:
            error = str(exc)
            log.warning("parent query for %r failed: %s", term, exc)
        trial.predictions.append(
            Prediction(term=term, true_parent=true_parent, predicted=predicted, error=error)
        )
    return trial


def score_trial(trial: ExpansionTrial) -> ExpansionScore:
    if not trial.predictions:
        raise NoPredictions(f"trial on {trial.taxonomy_id!r} has no predictions")
    answered = [p for p in trial.predictions if p.predicted is not None]
    correct = sum(
        1
        for p in answered
        if normalize_term(p.predicted) == normalize_term(p.true_parent)
    )
    total = len(trial.predictions)
    if answered:
        precision = correct / len(answered)
        undefined = False
    else:
        precision = 0.0
        undefined = True
    recall = correct / total
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ExpansionScore(
        answered=len(answered),
        correct=correct,
        total_hidden=total,
        precision=precision,
        recall=recall,
        f1=f1,
        precision_undefined=undefined,
    )


@dataclass
class BenchmarkCell:
    provider: str
    taxonomy: str
    mean_f1: float | None
    error: str | None = None
    trials: list[dict] = field(default_factory=list)


@dataclass
class BenchmarkResult:
    providers: list[str]
    taxonomies: list[str]
    cells: dict[tuple[str, str], BenchmarkCell]

    def cell(self, provider: str, taxonomy: str) -> BenchmarkCell:
        return self.cells[(provider, taxonomy)]


def benchmark(
    taxonomies: Mapping[str, Taxonomy],
    providers: Mapping[str, LlmGateway],
    seeds: Iterable[int],
    hidden_fraction: float = 0.2,
) -> BenchmarkResult:
    """Full cross product of provider x taxonomy; each cell averages the
    F1 of one trial per seed. Per-trial failures land in the cell's error
    field instead of propagating."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    cells: dict[tuple[str, str], BenchmarkCell] = {}
    for provider_name, gateway in providers.items():
        for tax_name, taxonomy in taxonomies.items():
            cell = BenchmarkCell(provider=provider_name, taxonomy=tax_name, mean_f1=None)
            f1s = []
            for seed in seeds:
                try:
                    trial = make_trial(taxonomy, seed, hidden_fraction)
                    run_trial(trial, gateway)
                    score = score_trial(trial)
                except (TooFewLeaves, NoPredictions, GatewayError) as exc:
                    cell.error = f"seed {seed}: {exc}"
                    log.warning("cell (%s, %s) failed: %s", provider_name, tax_name, exc)
                    continue
                f1s.append(score.f1)
                cell.trials.append(
                    {
                        "seed": seed,
                        "answered": score.answered,
                        "correct": score.correct,
                        "total_hidden": score.total_hidden,
                        "precision": score.precision,
                        "recall": score.recall,
                        "f1": score.f1,
                        "precision_undefined": score.precision_undefined,
                        "predictions": [
                            {
                                "term": p.term,
                                "true_parent": p.true_parent,
                                "predicted": p.predicted,
                                "error": p.error,
                            }
                            for p in trial.predictions
                        ],
                    }
                )
            if f1s:
                cell.mean_f1 = sum(f1s) / len(f1s)
            cells[(provider_name, tax_name)] = cell
    return BenchmarkResult(
        providers=list(providers),
        taxonomies=list(taxonomies),
        cells=cells,
    )


def write_csv(result: BenchmarkResult, path: str | Path) -> None:
    """Score table: rows = providers, columns = taxonomies, F1 to 4 dp."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["provider"] + result.taxonomies)
        for provider in result.providers:
            row = [provider]
            for taxonomy in result.taxonomies:
                cell = result.cells[(provider, taxonomy)]
                row.append("" if cell.mean_f1 is None else f"{cell.mean_f1:.4f}")
            writer.writerow(row)


def write_json(result: BenchmarkResult, path: str | Path) -> None:
    payload = {
        "scoring": SCORING_NOTE,
        "providers": result.providers,
        "taxonomies": result.taxonomies,
        "cells": [
            {
                "provider": cell.provider,
                "taxonomy": cell.taxonomy,
                "mean_f1": cell.mean_f1,
                "error": cell.error,
                "trials": cell.trials,
            }
            for cell in result.cells.values()
        ],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
