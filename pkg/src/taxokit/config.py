"""Pipeline configuration: one dataclass, loadable from an INI file.

Defaults follow the published parameter choices (30 keywords, bigram
minimum 20, topic counts 1 to 5, keep 60% of 20 topic terms, hide 20% of
leaves); every value can be overridden by the file and again by CLI flags.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path


@dataclass
class PipelineConfig:
    # data
    dataset_path: str = "data/toy_corpus.csv"
    dataset_format: str = "csv"
    stopwords_path: str = "data/stopwords_pt.txt"
    pos_lexicon_path: str = ""          # empty = tag everything NOUN
    max_merchants_per_macro: int = 50_000

    # keywords
    top_k: int = 30
    max_ngram: int = 3
    dedup_threshold: float = 0.8

    # lda
    min_bigram_count: int = 20
    k_min: int = 1
    k_max: int = 5
    sweeps: int = 500
    burn_in: int = 50
    hyper_update_every: int = 10
    beta: float = 0.01
    coherence_top_n: int = 10
    raw_top: int = 20
    keep_fraction: float = 0.6

    # llm
    provider: str = "mock"              # mock | http
    mock_script: str = ""
    cache_dir: str = ".cache/llm"
    retries: int = 3
    backoff_base: float = 0.5
    timeout: float = 60.0

    # expansion
    hidden_fraction: float = 0.2
    expansion_seeds: tuple[int, ...] = (1, 2, 3)
    semeval_paths: tuple[str, ...] = ()

    # tagging
    leaves_only: bool = False

    # run
    seed: int = 0
    output_dir: str = "out"
    force: bool = False

    @property
    def k_range(self) -> tuple[int, ...]:
        return tuple(range(self.k_min, self.k_max + 1))


_SECTION_OF = {
    "dataset_path": "data",
    "dataset_format": "data",
    "stopwords_path": "data",
    "pos_lexicon_path": "data",
    "max_merchants_per_macro": "data",
    "top_k": "keywords",
    "max_ngram": "keywords",
    "dedup_threshold": "keywords",
    "min_bigram_count": "lda",
    "k_min": "lda",
    "k_max": "lda",
    "sweeps": "lda",
    "burn_in": "lda",
    "hyper_update_every": "lda",
    "beta": "lda",
    "coherence_top_n": "lda",
    "raw_top": "lda",
    "keep_fraction": "lda",
    "provider": "llm",
    "mock_script": "llm",
    "cache_dir": "llm",
    "retries": "llm",
    "backoff_base": "llm",
    "timeout": "llm",
    "hidden_fraction": "expansion",
    "expansion_seeds": "expansion",
    "semeval_paths": "expansion",
    "leaves_only": "tagging",
    "seed": "run",
    "output_dir": "run",
    "force": "run",
}


def load_config(path: str | Path) -> PipelineConfig:
    """Read an INI file; unknown keys are an error, missing ones default."""
    parser = configparser.ConfigParser()
    with Path(path).open(encoding="utf-8") as handle:
        parser.read_file(handle)

    config = PipelineConfig()
    known = {f.name: f for f in fields(PipelineConfig)}
    overrides = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in known or _SECTION_OF.get(key) != section:
                raise ValueError(f"{path}: unknown option [{section}] {key}")
            overrides[key] = _coerce(key, raw, getattr(config, key))
    return replace(config, **overrides)


def _coerce(key: str, raw: str, default):
    if isinstance(default, bool):
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"option {key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if key == "expansion_seeds":
            return tuple(int(p) for p in parts)
        return tuple(parts)
    return raw


def config_fingerprint(config: PipelineConfig) -> dict:
    """Stable mapping of every parameter that affects pipeline outputs.

    Paths whose content is hashed separately (dataset, stopwords, mock
    script) and run-local locations (output, cache) are excluded so a
    relocated run with identical inputs still fingerprints the same.
    """
    skip = {
        "dataset_path", "stopwords_path", "pos_lexicon_path", "mock_script",
        "output_dir", "cache_dir", "force", "semeval_paths",
    }
    out = {}
    for f in fields(config):
        if f.name in skip:
            continue
        value = getattr(config, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out
