"""Stage orchestration for the end-to-end taxonomy flows.

Each stage writes its artifacts plus a manifest holding a fingerprint of
everything that influenced them (input file hashes and parameter values,
never timestamps or absolute paths). A rerun whose fingerprint matches an
existing manifest, with all outputs still present, is skipped unless the
config forces recomputation. With a warm LLM cache and fixed seeds, two
runs over the same inputs therefore produce byte-identical output trees.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus, evaluation, expansion, tagger, taxonomy
from .config import PipelineConfig, config_fingerprint
from .llm import HttpProvider, LlmGateway, MockProvider
from .selection import SelectionParams, gather_candidates

log = logging.getLogger(__name__)


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass
class StageOutcome:
    stage: str
    skipped: bool = False
    outputs: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def slugify(name: str) -> str:
    folded = corpus.normalize_term(name)
    slug = re.sub(r"[^a-z0-9]+", "-", folded).strip("-")
    return slug or "unnamed"


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self._records = None
        self._stopwords = None

    # ------------------------------------------------------------- inputs

    def records(self) -> list[corpus.MerchantRecord]:
        if self._records is None:
            self._records = corpus.ingest_merchants(
                self.config.dataset_path,
                format=self.config.dataset_format,
                max_merchants_per_macro=self.config.max_merchants_per_macro,
            )
        return self._records

    def stopwords(self) -> frozenset[str]:
        if self._stopwords is None:
            self._stopwords = corpus.load_stopwords(self.config.stopwords_path)
        return self._stopwords

    def pos_provider(self) -> corpus.PosProvider:
        if self.config.pos_lexicon_path:
            return corpus.LexiconPosProvider.from_file(self.config.pos_lexicon_path)
        return corpus.PassthroughPosProvider()

    def gateway(self) -> LlmGateway:
        cfg = self.config
        if cfg.provider == "mock":
            if not cfg.mock_script:
                raise StageError("llm", "mock provider selected but no mock script configured")
            provider = MockProvider.from_file(cfg.mock_script)
        elif cfg.provider == "http":
            provider = HttpProvider.from_env()
        else:
            raise StageError("llm", f"unknown provider {cfg.provider!r}")
        cache_dir = cfg.cache_dir or None
        return LlmGateway(
            provider,
            cache_dir=cache_dir,
            retries=cfg.retries,
            backoff_base=cfg.backoff_base,
            timeout=cfg.timeout,
        )

    def selection_params(self) -> SelectionParams:
        cfg = self.config
        return SelectionParams(
            top_k=cfg.top_k,
            max_ngram=cfg.max_ngram,
            dedup_threshold=cfg.dedup_threshold,
            min_bigram_count=cfg.min_bigram_count,
            k_range=cfg.k_range,
            sweeps=cfg.sweeps,
            burn_in=cfg.burn_in,
            hyper_update_every=cfg.hyper_update_every,
            beta=cfg.beta,
            coherence_top_n=cfg.coherence_top_n,
            raw_top=cfg.raw_top,
            keep_fraction=cfg.keep_fraction,
        )

    # ---------------------------------------------------------- manifests

    def _base_inputs(self) -> dict:
        cfg = self.config
        inputs = {
            "dataset": file_sha256(cfg.dataset_path),
            "stopwords": file_sha256(cfg.stopwords_path),
        }
        if cfg.pos_lexicon_path:
            inputs["pos_lexicon"] = file_sha256(cfg.pos_lexicon_path)
        if cfg.provider == "mock" and cfg.mock_script:
            inputs["mock_script"] = file_sha256(cfg.mock_script)
        return inputs

    def _fingerprint(self, extra_inputs: dict | None = None) -> dict:
        inputs = self._base_inputs()
        if extra_inputs:
            inputs.update(extra_inputs)
        return {"params": config_fingerprint(self.config), "inputs": inputs}

    def _manifest_path(self, stage_dir: str) -> Path:
        return self.out / stage_dir / "manifest.json"

    def _read_manifest(self, stage_dir: str) -> dict | None:
        path = self._manifest_path(stage_dir)
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except ValueError:
            return None

    def _can_skip(self, stage_dir: str, fingerprint: dict) -> dict | None:
        """The previous manifest, when it matches and its outputs exist."""
        if self.config.force:
            return None
        manifest = self._read_manifest(stage_dir)
        if manifest is None or manifest.get("fingerprint") != fingerprint:
            return None
        for rel in manifest.get("outputs", []):
            if not (self.out / rel).exists():
                return None
        return manifest

    def _write_manifest(self, stage_dir: str, payload: dict) -> None:
        path = self._manifest_path(stage_dir)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    # ------------------------------------------------------------- stages

    def build_filter(self) -> StageOutcome:
        """First term-selection pass: one generic-word filter per macro."""
        outcome = StageOutcome(stage="build-filter")
        fingerprint = self._fingerprint()
        if self._can_skip("filters", fingerprint):
            outcome.skipped = True
            outcome.notes.append("inputs unchanged; filters reused")
            return outcome

        grouped = corpus.build_subcorpora(
            self.records(), self.stopwords(), self.pos_provider()
        )
        gateway = self.gateway()
        params = self.selection_params()
        filter_dir = self.out / "filters"
        filter_dir.mkdir(parents=True, exist_ok=True)

        entries = {}
        outputs = []
        for macro in sorted(grouped):
            word_filter = corpus.build_generic_filter(
                grouped[macro], gateway, params, seed=self.config.seed
            )
            rel = f"filters/{slugify(macro)}.txt"
            word_filter.save(self.out / rel)
            entries[macro] = {
                "file": rel,
                "words": len(word_filter.words),
                "micro_categories": len(grouped[macro]),
            }
            outputs.append(rel)
            outcome.notes.append(
                f"{macro}: {len(word_filter.words)} generic words "
                f"from {len(grouped[macro])} micro categories"
            )
        self._write_manifest(
            "filters",
            {"fingerprint": fingerprint, "outputs": outputs, "filters": entries},
        )
        outcome.outputs = outputs
        return outcome

    def _filter_for(self, macro: str, filters_manifest: dict) -> corpus.GenericWordFilter | None:
        entry = filters_manifest.get("filters", {}).get(macro)
        if entry is None:
            return None
        return corpus.GenericWordFilter.load(self.out / entry["file"], macro_category=macro)

    def build_taxonomies(self) -> StageOutcome:
        """Second pass per micro category: candidates, relatedness filter,
        hierarchy prompt, taxonomy file. Per-category failures are recorded
        and the remaining categories still build."""
        outcome = StageOutcome(stage="build-taxonomies")
        filters_manifest = self._read_manifest("filters")
        if filters_manifest is None:
            raise StageError(
                "build-taxonomies", "filters manifest missing; run build-filter first"
            )
        filter_inputs = {
            f"filter:{macro}": file_sha256(self.out / entry["file"])
            for macro, entry in sorted(filters_manifest.get("filters", {}).items())
        }
        fingerprint = self._fingerprint(filter_inputs)
        if self._can_skip("taxonomies", fingerprint):
            outcome.skipped = True
            outcome.notes.append("inputs unchanged; taxonomies reused")
            return outcome

        gateway = self.gateway()
        params = self.selection_params()
        tax_dir = self.out / "taxonomies"
        tax_dir.mkdir(parents=True, exist_ok=True)

        records = self.records()
        by_macro: dict[str, list[corpus.MerchantRecord]] = {}
        for record in records:
            by_macro.setdefault(record.macro_category, []).append(record)

        entries = []
        outputs = []
        for macro in sorted(by_macro):
            word_filter = self._filter_for(macro, filters_manifest)
            grouped = corpus.build_subcorpora(
                by_macro[macro], self.stopwords(), self.pos_provider(), word_filter
            )
            micros = grouped.get(macro, {})
            for micro in sorted(micros):
                entry = {"macro": macro, "micro": micro}
                try:
                    candidates = gather_candidates(
                        micros[micro], params, seed=self.config.seed
                    )
                    if not candidates:
                        raise corpus.EmptyCorpus("no candidate terms")
                    separation = gateway.separate_terms(candidates, micro)
                    if not separation.related:
                        raise corpus.EmptyCorpus("no related terms after separation")
                    hierarchy = gateway.request_hierarchy(list(separation.related))
                    built = taxonomy.from_hierarchy_result(micro, hierarchy)
                    rel = f"taxonomies/{slugify(micro)}.json"
                    built.save(self.out / rel)
                    entry.update({"file": rel, "nodes": len(built)})
                    outputs.append(rel)
                    outcome.notes.append(f"{micro}: {len(built)} nodes")
                except corpus.EmptyCorpus as exc:
                    entry["skipped"] = str(exc)
                    outcome.notes.append(f"{micro}: skipped ({exc})")
                except Exception as exc:  # recorded, remaining categories proceed
                    entry["error"] = f"{type(exc).__name__}: {exc}"
                    outcome.errors.append(f"{micro}: {exc}")
                entries.append(entry)

        self._write_manifest(
            "taxonomies",
            {"fingerprint": fingerprint, "outputs": outputs, "taxonomies": entries},
        )
        outcome.outputs = outputs
        return outcome

    def _load_built_taxonomies(self) -> dict[str, taxonomy.Taxonomy]:
        manifest = self._read_manifest("taxonomies")
        if manifest is None:
            raise StageError("tag", "taxonomies manifest missing; run build-taxonomies first")
        loaded = {}
        for entry in manifest.get("taxonomies", []):
            if "file" in entry:
                tax = taxonomy.Taxonomy.load(self.out / entry["file"])
                loaded[tax.topic] = tax
        return loaded

    def tag(self) -> StageOutcome:
        outcome = StageOutcome(stage="tag")
        manifest = self._read_manifest("taxonomies")
        if manifest is None:
            raise StageError("tag", "taxonomies manifest missing; run build-taxonomies first")
        tax_inputs = {
            f"taxonomy:{rel}": file_sha256(self.out / rel)
            for rel in manifest.get("outputs", [])
        }
        fingerprint = self._fingerprint(tax_inputs)
        if self._can_skip("tags", fingerprint):
            outcome.skipped = True
            outcome.notes.append("inputs unchanged; assignments reused")
            return outcome

        taxonomies = self._load_built_taxonomies()
        result = tagger.tag_dataset(
            self.records(), taxonomies, leaves_only=self.config.leaves_only
        )
        tags_dir = self.out / "tags"
        tags_dir.mkdir(parents=True, exist_ok=True)
        tagger.save_assignments(result.assignments, tags_dir / "assignments.jsonl")
        skip_payload = {
            "skipped": [
                {"merchant_id": mid, "micro_category": micro}
                for mid, micro in result.skipped
            ],
            "counts": dict(sorted(result.skip_counts().items())),
        }
        (tags_dir / "skips.json").write_text(
            json.dumps(skip_payload, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        outputs = ["tags/assignments.jsonl", "tags/skips.json"]
        self._write_manifest(
            "tags",
            {
                "fingerprint": fingerprint,
                "outputs": outputs,
                "tagged": len(result.assignments),
                "skipped": len(result.skipped),
            },
        )
        outcome.outputs = outputs
        outcome.notes.append(
            f"{len(result.assignments)} merchants tagged, {len(result.skipped)} skipped"
        )
        return outcome

    def expand_eval(self) -> StageOutcome:
        outcome = StageOutcome(stage="expand-eval")
        extra_inputs = {}
        manifest = self._read_manifest("taxonomies")
        if manifest is not None:
            extra_inputs.update(
                {
                    f"taxonomy:{rel}": file_sha256(self.out / rel)
                    for rel in manifest.get("outputs", [])
                }
            )
        for path in self.config.semeval_paths:
            extra_inputs[f"semeval:{Path(path).name}"] = file_sha256(path)
        fingerprint = self._fingerprint(extra_inputs)
        if self._can_skip("expansion", fingerprint):
            outcome.skipped = True
            outcome.notes.append("inputs unchanged; scores reused")
            return outcome

        taxonomies: dict[str, taxonomy.Taxonomy] = {}
        if manifest is not None:
            taxonomies.update(self._load_built_taxonomies())
        for path in self.config.semeval_paths:
            loaded = taxonomy.load_semeval_edges(path)
            taxonomies[loaded.topic] = loaded
        if not taxonomies:
            raise StageError(
                "expand-eval",
                "no taxonomies available; run build-taxonomies or configure semeval_paths",
            )

        gateway = self.gateway()
        provider_name = f"{gateway.provider.provider_id}/{gateway.provider.model_id}"
        result = expansion.benchmark(
            taxonomies,
            {provider_name: gateway},
            self.config.expansion_seeds,
            hidden_fraction=self.config.hidden_fraction,
        )
        exp_dir = self.out / "expansion"
        exp_dir.mkdir(parents=True, exist_ok=True)
        expansion.write_csv(result, exp_dir / "scores.csv")
        expansion.write_json(result, exp_dir / "scores.json")
        outputs = ["expansion/scores.csv", "expansion/scores.json"]

        for cell in result.cells.values():
            if cell.error is not None:
                outcome.errors.append(f"{cell.taxonomy}: {cell.error}")
            else:
                outcome.notes.append(f"{cell.taxonomy}: mean F1 {cell.mean_f1:.4f}")
        self._write_manifest(
            "expansion", {"fingerprint": fingerprint, "outputs": outputs}
        )
        outcome.outputs = outputs
        return outcome

    def coherence(
        self,
        judgments_path: str,
        taxonomy_paths: list[str] | None = None,
        assignments_path: str | None = None,
    ) -> StageOutcome:
        outcome = StageOutcome(stage="coherence")
        taxonomies = {}
        for path in taxonomy_paths or []:
            tax = taxonomy.Taxonomy.load(path)
            taxonomies[tax.topic] = tax
        assignments = {}
        if assignments_path:
            for assignment in load_assignments(assignments_path):
                assignments[assignment.merchant_id] = assignment

        label_sets = {}
        for topic, tax in taxonomies.items():
            label_sets[("taxonomy_terms", topic)] = [
                n.label for n in tax.nodes.values() if n.node_id != tax.root_id
            ]
        for merchant_id, assignment in assignments.items():
            label_sets[("merchant_tags", merchant_id)] = [
                t.label for t in assignment.tags
            ]

        judgments = evaluation.load_judgments(judgments_path, label_sets)
        grouped: dict[tuple[str, str], list] = {}
        for judgment in judgments:
            grouped.setdefault((judgment.subject, judgment.subject_id), []).append(judgment)

        coh_dir = self.out / "coherence"
        coh_dir.mkdir(parents=True, exist_ok=True)
        outputs = []
        for (subject, subject_id), group in sorted(grouped.items()):
            try:
                if subject == "taxonomy_terms":
                    if subject_id not in taxonomies:
                        raise StageError(
                            "coherence", f"no taxonomy loaded for topic {subject_id!r}"
                        )
                    report = evaluation.topic_coherence_report(
                        taxonomies[subject_id], group
                    )
                else:
                    if subject_id not in assignments:
                        raise StageError(
                            "coherence", f"no assignment loaded for merchant {subject_id!r}"
                        )
                    report = evaluation.merchant_coherence_report(
                        assignments[subject_id], group
                    )
            except (StageError, evaluation.EvaluationError) as exc:
                outcome.errors.append(str(exc))
                continue
            rel = f"coherence/{subject}_{slugify(subject_id)}.json"
            evaluation.save_report(report, self.out / rel)
            outputs.append(rel)
            outcome.notes.append(
                f"{subject}/{subject_id}: mean {report.mean_coherence:.4f} "
                f"over {len(report.per_evaluator)} evaluators"
            )
        outcome.outputs = outputs
        return outcome

    def load_semeval(self, edges_path: str) -> StageOutcome:
        outcome = StageOutcome(stage="load-semeval")
        loaded = taxonomy.load_semeval_edges(edges_path)
        problems = taxonomy.validate(loaded)
        if problems:
            raise StageError(
                "load-semeval", "; ".join(str(p) for p in problems)
            )
        tax_dir = self.out / "taxonomies"
        tax_dir.mkdir(parents=True, exist_ok=True)
        rel = f"taxonomies/{slugify(Path(edges_path).stem)}.json"
        loaded.save(self.out / rel)
        outcome.outputs = [rel]
        outcome.notes.append(
            f"{loaded.topic}: {len(loaded)} nodes, "
            f"{len(loaded)-1} edges, {len(loaded.leaves())} leaves"
        )
        return outcome


def load_assignments(path: str | Path) -> list[tagger.TagAssignment]:
    """Read tag assignments back from JSONL (match offsets are not stored
    in the file, so they come back as 0)."""
    assignments = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        assignments.append(
            tagger.TagAssignment(
                merchant_id=data["merchant_id"],
                taxonomy_topic=data["topic"],
                tags=tuple(
                    tagger.Tag(node_id=t["node_id"], label=t["label"], first_match_offset=0)
                    for t in data["tags"]
                ),
            )
        )
    return assignments
