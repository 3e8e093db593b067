"""Command-line entry point.

Subcommands mirror the pipeline stages (each runs the pipeline up to that
stage, reusing the cache) plus ``synth`` for generating benchmark corpora and
``run`` for the full pass.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .pipeline import STAGES, PipelineError, run_pipeline
from .synthkit import OperationSpec, PlantSpec, write_synth_corpus


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--terms", nargs="*", help="terms of interest (override config)")
    parser.add_argument("--top-k", type=int, default=None, help="influencers per convo (default 10)")
    parser.add_argument("--stage", default=None, help="stop after this stage")
    parser.add_argument("--resume", action="store_true", help="reuse cached stages when unchanged")
    parser.add_argument("--llm-endpoint", default=None, help="chat endpoint URL (override config)")
    parser.add_argument("--mock-llm", action="store_true", help="use the scripted offline responder")
    parser.add_argument("--seed", type=int, default=None, help="pipeline seed (override config)")
    parser.add_argument("--out", default=None, help="output directory (override config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convoscope")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--communities", type=int, default=3)
    synth.add_argument("--hashtags-per", type=int, default=5)
    synth.add_argument("--messages-per", type=int, default=200)
    synth.add_argument("--noise", type=int, default=100)
    synth.add_argument("--clique", type=int, default=0, help="operation clique size (0 disables)")
    synth.add_argument("--mutual-rate", type=float, default=0.8)
    synth.add_argument("--self-rate", type=float, default=0.3)
    synth.add_argument("--organic", type=int, default=20)
    synth.add_argument("--organic-rate", type=float, default=0.1)
    synth.add_argument("--seed", type=int, default=0)

    run = sub.add_parser("run", help="run the full pipeline")
    _add_run_flags(run)
    for name in STAGES:
        stage_parser = sub.add_parser(name, help=f"run the pipeline through the {name} stage")
        _add_run_flags(stage_parser)
    return parser


def _apply_overrides(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    if args.terms is not None:
        config.convo.terms = list(args.terms)
    if args.top_k is not None:
        config.convo.top_k = args.top_k
    if args.llm_endpoint is not None:
        config.llm.endpoint = args.llm_endpoint
    if args.mock_llm:
        config.llm.mock = True
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out_dir = args.out
    return config


def _write_groups_table(report: dict, out_dir: Path) -> Path:
    lines = [
        f"{group['group_id']}\t{tag}"
        for group in report.get("groups", [])
        for tag in group["members"]
    ]
    path = out_dir / "groups.tsv"
    path.write_text("\n".join(lines) + ("\n" if lines else ""), "utf-8")
    return path


def _write_clusters_table(report: dict, out_dir: Path) -> Path:
    lines = []
    for convo in report.get("convos", []):
        for cluster in convo.get("clusters", []):
            terms = " ".join(cluster["top_terms"])
            lines.append(f"{cluster['cluster_id']}\t{cluster['size']}\t{terms}")
    path = out_dir / "clusters.tsv"
    path.write_text("\n".join(lines) + ("\n" if lines else ""), "utf-8")
    return path


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "synth":
        operation = None
        if args.clique > 0:
            operation = OperationSpec(
                clique_size=args.clique,
                mutual_rate=args.mutual_rate,
                self_rate=args.self_rate,
                organic_authors=args.organic,
                organic_rate=args.organic_rate,
            )
        spec = PlantSpec(
            n_communities=args.communities,
            hashtags_per_community=args.hashtags_per,
            messages_per_community=args.messages_per,
            noise_messages=args.noise,
            operation=operation,
            seed=args.seed,
        )
        corpus_path, truth_path = write_synth_corpus(spec, args.out)
        print(f"wrote {corpus_path} and {truth_path}")
        return 0

    config = _apply_overrides(load_config(args.config), args)
    stop_after = args.stage
    if args.command != "run" and stop_after is None:
        stop_after = args.command
    try:
        report = run_pipeline(config, stop_after=stop_after, resume=args.resume)
    except PipelineError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    out_dir = Path(config.out_dir)
    print(f"report: {out_dir / 'report.json'}")
    if args.command == "groups" or "groups" in report:
        print(f"groups table: {_write_groups_table(report, out_dir)}")
    if report.get("convos") and any(c.get("clusters") for c in report["convos"]):
        print(f"clusters table: {_write_clusters_table(report, out_dir)}")
    for path in sorted(str(p) for p in out_dir.glob("*.dot")):
        print(f"graph export: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
