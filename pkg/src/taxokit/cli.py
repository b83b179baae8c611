"""Command line entry point.

Subcommands map one-to-one onto pipeline stages. Exit code is 0 only when
no stage reported an error; per-category failures inside build-taxonomies
or expand-eval still exit nonzero after printing a summary.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import PipelineConfig, load_config
from .pipeline import Pipeline, StageError, StageOutcome


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxokit",
        description="Build, apply and evaluate merchant-category taxonomies.",
    )
    parser.add_argument("--config", help="INI config file (defaults apply without one)")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument(
        "--mock", metavar="SCRIPT", help="use the scripted offline provider from this file"
    )
    parser.add_argument("--cache-dir", help="override the LLM cache directory")
    parser.add_argument("--output", help="override the output directory")
    parser.add_argument(
        "--force", action="store_true", help="recompute stages even when manifests match"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build-filter", help="derive per-macro generic-word filters")
    sub.add_parser("build-taxonomies", help="build one taxonomy per micro category")
    sub.add_parser("tag", help="assign taxonomy tags to merchants")
    sub.add_parser("expand-eval", help="run the taxonomy-expansion benchmark")

    coh = sub.add_parser("coherence", help="aggregate human coherence judgments")
    coh.add_argument("--judgments", required=True, help="JSONL judgment file")
    coh.add_argument(
        "--taxonomy",
        action="append",
        default=[],
        metavar="FILE",
        help="taxonomy JSON to evaluate against (repeatable)",
    )
    coh.add_argument("--assignments", help="tag assignments JSONL")

    sem = sub.add_parser("load-semeval", help="convert a relation TSV into taxonomy JSON")
    sem.add_argument("edges", help="tab-separated child/parent edge file")
    return parser


def _apply_overrides(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.mock:
        updates["provider"] = "mock"
        updates["mock_script"] = args.mock
    if args.cache_dir is not None:
        updates["cache_dir"] = args.cache_dir
    if args.output is not None:
        updates["output_dir"] = args.output
    if args.force:
        updates["force"] = True
    return dataclasses.replace(config, **updates) if updates else config


def _report(outcome: StageOutcome) -> None:
    tag = "skipped" if outcome.skipped else ("ok" if outcome.ok else "failed")
    print(f"[{outcome.stage}] {tag}")
    for note in outcome.notes:
        print(f"[{outcome.stage}]   {note}")
    for error in outcome.errors:
        print(f"[{outcome.stage}] ERROR: {error}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config) if args.config else PipelineConfig()
    except (OSError, ValueError) as exc:
        print(f"[config] ERROR: {exc}", file=sys.stderr)
        return 1
    config = _apply_overrides(config, args)
    pipeline = Pipeline(config)

    try:
        if args.command == "build-filter":
            outcome = pipeline.build_filter()
        elif args.command == "build-taxonomies":
            outcome = pipeline.build_taxonomies()
        elif args.command == "tag":
            outcome = pipeline.tag()
        elif args.command == "expand-eval":
            outcome = pipeline.expand_eval()
        elif args.command == "coherence":
            outcome = pipeline.coherence(
                args.judgments, args.taxonomy, args.assignments
            )
        else:
            outcome = pipeline.load_semeval(args.edges)
    except StageError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # surface module errors with a stage label
        print(f"[{args.command}] ERROR: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    _report(outcome)
    return 0 if outcome.ok else 1


if __name__ == "__main__":
    sys.exit(main())
